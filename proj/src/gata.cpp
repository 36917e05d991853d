#include "cloudsched/gata.hpp"

#include "cloudsched/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace cloudsched::gata {

void GaConfig::validate(std::size_t candidate_count) const
{
    if (pop_size < 2)
        throw InvalidArgument("ga: pop_size must be >= 2");
    if (chrom_len < 1)
        throw InvalidArgument("ga: chrom_len must be >= 1");
    if (chrom_len > candidate_count)
        throw InvalidArgument("ga: " + std::to_string(candidate_count) +
                              " candidates cannot fill a chromosome of length " +
                              std::to_string(chrom_len));
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
        throw InvalidArgument("ga: mutation_rate must lie in [0,1]");
    if (!(elite_fraction > 0.0 && elite_fraction <= 1.0))
        throw InvalidArgument("ga: elite_fraction must lie in (0,1]");
    if (!(fairness_factor > 0.0 && fairness_factor <= 1.0))
        throw InvalidArgument("ga: fairness_factor must lie in (0,1]");
    if (max_iterations < 0)
        throw InvalidArgument("ga: max_iterations must be >= 0");
    if (patience < 1)
        throw InvalidArgument("ga: patience must be >= 1");
}

double contribution(const GeneInfo& g, bool queued, double fairness_factor)
{
    const double base = g.response_time + g.resources;
    return queued ? fairness_factor * base : base;
}

namespace {

const GeneInfo& lookup(const GeneTable& tasks, TaskId id)
{
    const auto it = tasks.find(id);
    if (it == tasks.end())
        throw InvalidArgument("ga: unknown task id " + std::to_string(id));
    return it->second;
}

bool lex_less(const Chromosome& a, const Chromosome& b)
{
    if (a.fitness != b.fitness)
        return a.fitness < b.fitness;
    return a.genes < b.genes;
}

} // namespace

double fitness(std::span<const TaskId> genes, const GeneTable& tasks, const Queue& queue,
               double fairness_factor, FairnessMode mode)
{
    std::array<TaskId, 32> small{};
    std::vector<TaskId> large;
    std::span<TaskId> sorted;
    if (genes.size() <= small.size()) {
        std::copy(genes.begin(), genes.end(), small.begin());
        sorted = std::span<TaskId>(small.data(), genes.size());
    }
    else {
        large.assign(genes.begin(), genes.end());
        sorted = large;
    }
    std::sort(sorted.begin(), sorted.end());

    double sum = 0.0;
    bool any_queued = false;
    for (TaskId id : sorted) {
        const bool queued = queue.contains(id);
        any_queued = any_queued || queued;
        const auto& g = lookup(tasks, id);
        sum += mode == FairnessMode::PerGene ? contribution(g, queued, fairness_factor)
                                             : contribution(g, false, 1.0);
    }
    if (mode == FairnessMode::WholeChromosome && any_queued)
        sum *= fairness_factor;
    return sum;
}

double fitness(const Chromosome& c, const GeneTable& tasks, const Queue& queue,
               double fairness_factor, FairnessMode mode)
{
    return fitness(c.genes, tasks, queue, fairness_factor, mode);
}

void validate_chromosome(const Chromosome& c, std::span<const TaskId> candidates,
                         std::size_t length)
{
    if (c.genes.size() != length)
        throw InvalidArgument("chromosome has length " + std::to_string(c.genes.size()) +
                              ", expected " + std::to_string(length));
    std::vector<TaskId> sorted = c.genes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InvalidArgument("chromosome has duplicate genes");
    for (TaskId id : c.genes) {
        if (std::find(candidates.begin(), candidates.end(), id) == candidates.end())
            throw InvalidArgument("chromosome gene " + std::to_string(id) + " is not a candidate");
    }
}

std::vector<Chromosome> init_population(std::span<const TaskId> candidates, const GaConfig& cfg,
                                        Rng& rng)
{
    cfg.validate(candidates.size());
    std::vector<TaskId> pool(candidates.begin(), candidates.end());
    std::vector<Chromosome> pop;
    pop.reserve(cfg.pop_size);
    for (std::size_t c = 0; c < cfg.pop_size; ++c) {
        // partial Fisher-Yates: the first chrom_len slots are a uniform ordered subset
        for (std::size_t i = 0; i < cfg.chrom_len; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        Chromosome ch;
        ch.genes.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cfg.chrom_len));
        pop.push_back(std::move(ch));
    }
    return pop;
}

std::vector<Chromosome> init_population(std::span<const TaskId> candidates, const GaConfig& cfg)
{
    Rng rng(cfg.seed);
    return init_population(candidates, cfg, rng);
}

std::vector<Chromosome> select_elite(std::vector<Chromosome> population, double elite_fraction)
{
    if (population.empty())
        throw InvalidArgument("select_elite: empty population");
    if (!(elite_fraction > 0.0 && elite_fraction <= 1.0))
        throw InvalidArgument("select_elite: fraction must lie in (0,1]");
    std::sort(population.begin(), population.end(), lex_less);
    const double raw = elite_fraction * static_cast<double>(population.size());
    auto keep = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    keep = std::clamp<std::size_t>(keep, 1, population.size());
    population.resize(keep);
    return population;
}

namespace {

// Left-to-right scan; a repeated gene is replaced by the donor's gene at the
// same position when unused, else by the lowest unused id from either parent.
void repair(std::vector<TaskId>& child, const std::vector<TaskId>& donor,
            const std::vector<TaskId>& union_sorted)
{
    std::unordered_set<TaskId> used;
    used.reserve(child.size() * 2);
    for (std::size_t i = 0; i < child.size(); ++i) {
        if (used.insert(child[i]).second)
            continue;
        // child[i] duplicates an earlier gene
        const auto remaining_has = [&](TaskId id) {
            return std::find(child.begin() + static_cast<std::ptrdiff_t>(i) + 1, child.end(), id) !=
                   child.end();
        };
        TaskId replacement = donor[i];
        if (used.contains(replacement) || remaining_has(replacement)) {
            bool found = false;
            for (TaskId id : union_sorted) {
                if (!used.contains(id) && !remaining_has(id)) {
                    replacement = id;
                    found = true;
                    break;
                }
            }
            if (!found)
                throw StateError("crossover repair: no unused gene available");
        }
        child[i] = replacement;
        used.insert(replacement);
    }
}

} // namespace

std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& p1, const Chromosome& p2,
                                               std::size_t a, std::size_t b)
{
    const std::size_t len = p1.genes.size();
    if (len != p2.genes.size())
        throw InvalidArgument("crossover: parents differ in length");
    if (len < 2)
        throw InvalidArgument("crossover: chromosome length must be >= 2");
    if (!(a > 0 && a < b && b <= len))
        throw InvalidArgument("crossover: cut points must satisfy 0 < a < b <= L");

    Chromosome c1 = p1;
    Chromosome c2 = p2;
    for (std::size_t i = a; i < b; ++i)
        std::swap(c1.genes[i], c2.genes[i]);

    std::vector<TaskId> pool = p1.genes;
    pool.insert(pool.end(), p2.genes.begin(), p2.genes.end());
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

    repair(c1.genes, p2.genes, pool);
    repair(c2.genes, p1.genes, pool);
    c1.fitness = 0.0;
    c2.fitness = 0.0;
    return {std::move(c1), std::move(c2)};
}

std::pair<Chromosome, Chromosome> crossover_two_point(const Chromosome& p1, const Chromosome& p2,
                                                      Rng& rng)
{
    const std::size_t len = p1.genes.size();
    if (len < 2)
        throw InvalidArgument("crossover: chromosome length must be >= 2");
    std::uniform_int_distribution<std::size_t> first(1, len - 1);
    const std::size_t a = first(rng);
    std::uniform_int_distribution<std::size_t> second(a + 1, len);
    const std::size_t b = second(rng);
    return crossover_at(p1, p2, a, b);
}

MutationOutcome mutate_with_local_search(const Chromosome& c, std::span<const TaskId> candidates,
                                         const GeneTable& tasks, const Queue& queue,
                                         const GaConfig& cfg, Rng& rng)
{
    MutationOutcome out{c, std::nullopt};
    if (cfg.mutation_rate <= 0.0 || c.genes.empty() || candidates.size() <= c.genes.size())
        return out;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (!(coin(rng) < cfg.mutation_rate))
        return out;

    std::vector<TaskId> unused;
    unused.reserve(candidates.size() - c.genes.size());
    for (TaskId id : candidates) {
        if (std::find(c.genes.begin(), c.genes.end(), id) == c.genes.end())
            unused.push_back(id);
    }
    if (unused.empty())
        return out;

    std::uniform_int_distribution<std::size_t> pos_dist(0, c.genes.size() - 1);
    const std::size_t pos = pos_dist(rng);
    std::uniform_int_distribution<std::size_t> rep_dist(0, unused.size() - 1);
    const TaskId random_pick = unused[rep_dist(rng)];

    Chromosome naive = c;
    naive.genes[pos] = random_pick;
    naive.fitness = fitness(naive, tasks, queue, cfg.fairness_factor, cfg.fairness_mode);

    // neighbourhood: unused candidates closest in weight to the gene taken out
    const double anchor = lookup(tasks, c.genes[pos]).weight;
    std::vector<std::pair<double, TaskId>> near;
    near.reserve(unused.size());
    for (TaskId id : unused) {
        if (id != random_pick)
            near.emplace_back(std::abs(lookup(tasks, id).weight - anchor), id);
    }
    const std::size_t k = std::min(cfg.local_search_k, near.size());
    std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(k), near.end());

    Chromosome best = naive;
    Chromosome trial = naive;
    for (std::size_t i = 0; i < k; ++i) {
        trial.genes[pos] = near[i].second;
        trial.fitness = fitness(trial, tasks, queue, cfg.fairness_factor, cfg.fairness_mode);
        if (trial.fitness < best.fitness)
            best = trial;
    }
    out.result = std::move(best);
    out.naive = std::move(naive);
    return out;
}

namespace {

void evaluate(std::vector<Chromosome>& pop, const GeneTable& tasks, const Queue& queue,
              const GaConfig& cfg)
{
    for (auto& ch : pop)
        ch.fitness = fitness(ch, tasks, queue, cfg.fairness_factor, cfg.fairness_mode);
}

void check_candidates(std::span<const TaskId> candidates, const GeneTable& tasks)
{
    std::vector<TaskId> sorted(candidates.begin(), candidates.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InvalidArgument("ga: duplicate candidate ids");
    for (TaskId id : sorted)
        lookup(tasks, id);
}

} // namespace

GaResult evolve(std::span<const TaskId> candidates, const GeneTable& tasks, const Queue& queue,
                const GaConfig& cfg)
{
    cfg.validate(candidates.size());
    check_candidates(candidates, tasks);

    GaResult result;
    if (candidates.size() == cfg.chrom_len) {
        result.best.genes.assign(candidates.begin(), candidates.end());
        std::sort(result.best.genes.begin(), result.best.genes.end());
        result.best.fitness = fitness(result.best, tasks, queue, cfg.fairness_factor, cfg.fairness_mode);
        result.best_fitness_per_generation.push_back(result.best.fitness);
        result.stop_reason = "single feasible set";
        return result;
    }

    Rng rng(cfg.seed);
    auto pop = init_population(candidates, cfg, rng);
    evaluate(pop, tasks, queue, cfg);
    std::sort(pop.begin(), pop.end(), lex_less);
    result.best = pop.front();
    result.best_fitness_per_generation.push_back(result.best.fitness);

    int stationary = 0;
    int generation = 0;
    std::vector<Chromosome> parents;
    std::vector<double> wheel;
    while (true) {
        if (generation >= cfg.max_iterations) {
            result.stop_reason = "max iterations";
            break;
        }
        if (stationary >= cfg.patience) {
            result.stop_reason = "stationary";
            break;
        }

        std::vector<Chromosome> next;
        next.reserve(cfg.pop_size);
        if (cfg.selection == Selection::Elitist) {
            parents = select_elite(pop, cfg.elite_fraction);
            next = parents;
        }
        else {
            parents = pop;
            next.push_back(pop.front());
            wheel.resize(pop.size());
            for (std::size_t i = 0; i < pop.size(); ++i)
                wheel[i] = 1.0 / std::max(pop[i].fitness, 1e-12);
        }

        std::uniform_int_distribution<std::size_t> uniform_parent(0, parents.size() - 1);
        std::discrete_distribution<std::size_t> roulette_parent;
        if (cfg.selection == Selection::Roulette)
            roulette_parent = std::discrete_distribution<std::size_t>(wheel.begin(), wheel.end());
        auto pick = [&]() -> const Chromosome& {
            return cfg.selection == Selection::Elitist ? parents[uniform_parent(rng)]
                                                       : parents[roulette_parent(rng)];
        };

        while (next.size() < cfg.pop_size) {
            const Chromosome& p1 = pick();
            const Chromosome& p2 = pick();
            auto children = cfg.chrom_len >= 2 ? crossover_two_point(p1, p2, rng)
                                               : std::pair<Chromosome, Chromosome>{p1, p2};
            for (Chromosome* child : {&children.first, &children.second}) {
                if (next.size() >= cfg.pop_size)
                    break;
                auto mutated = mutate_with_local_search(*child, candidates, tasks, queue, cfg, rng);
                mutated.result.fitness =
                    fitness(mutated.result, tasks, queue, cfg.fairness_factor, cfg.fairness_mode);
                next.push_back(std::move(mutated.result));
            }
        }

        std::sort(next.begin(), next.end(), lex_less);
        pop.swap(next);
        ++generation;
        result.best_fitness_per_generation.push_back(pop.front().fitness);
        if (pop.front().fitness < result.best.fitness) {
            result.best = pop.front();
            stationary = 0;
        }
        else {
            ++stationary;
        }
    }
    result.generations_run = generation;
    return result;
}

Optimum enumerate_optimum(std::span<const TaskId> candidates, const GeneTable& tasks,
                          const Queue& queue, std::size_t length, double fairness_factor,
                          FairnessMode mode)
{
    if (candidates.size() > kEnumerationBound)
        throw InvalidArgument("enumerate_optimum: " + std::to_string(candidates.size()) +
                              " candidates exceed the enumeration bound of " +
                              std::to_string(kEnumerationBound));
    if (length < 1 || length > candidates.size())
        throw InvalidArgument("enumerate_optimum: subset length out of range");
    check_candidates(candidates, tasks);

    std::vector<TaskId> ids(candidates.begin(), candidates.end());
    std::sort(ids.begin(), ids.end());

    // combinations in lexicographic order of index vectors
    std::vector<std::size_t> idx(length);
    for (std::size_t i = 0; i < length; ++i)
        idx[i] = i;
    std::vector<TaskId> subset(length);

    Optimum best;
    bool have = false;
    while (true) {
        for (std::size_t i = 0; i < length; ++i)
            subset[i] = ids[idx[i]];
        const double f = fitness(subset, tasks, queue, fairness_factor, mode);
        if (!have || f < best.fitness) {
            best.fitness = f;
            best.subset = subset;
            have = true;
        }

        std::size_t i = length;
        while (i > 0 && idx[i - 1] == ids.size() - length + (i - 1))
            --i;
        if (i == 0)
            break;
        ++idx[i - 1];
        for (std::size_t j = i; j < length; ++j)
            idx[j] = idx[j - 1] + 1;
    }
    return best;
}

std::string fitness_trace_csv(const GaResult& r)
{
    std::ostringstream os;
    os.precision(17);
    os << "generation,best_fitness\n";
    for (std::size_t g = 0; g < r.best_fitness_per_generation.size(); ++g)
        os << g << ',' << r.best_fitness_per_generation[g] << '\n';
    return os.str();
}

} // namespace cloudsched::gata
