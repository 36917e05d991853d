#pragma once

#include "cloudsched/workload.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace cloudsched::gata {

using Rng = std::mt19937_64;

/// What the fitness function knows about a candidate task. Response time and
/// resource count are whatever scale the caller chose (the scheduler feeds
/// normalized values); `weight` drives the local-search neighbourhood.
struct GeneInfo {
    double response_time = 0.0;
    double resources = 0.0;
    double weight = 0.0;
};

using GeneTable = std::unordered_map<TaskId, GeneInfo>;
using Queue = std::unordered_set<TaskId>;

enum class FairnessMode {
    PerGene,         // each queued gene's term is scaled
    WholeChromosome, // the whole sum is scaled when any gene is queued
};

enum class Selection {
    Elitist,  // best elite_fraction of the population breed; all of them survive
    Roulette, // fitness-proportional over 1/fitness; only the single best survives
};

struct Chromosome {
    std::vector<TaskId> genes;
    double fitness = 0.0; // lower is better

    bool operator==(const Chromosome&) const = default;
};

struct GaConfig {
    std::size_t pop_size = 500;
    std::size_t chrom_len = 10;
    double mutation_rate = 0.05;
    double elite_fraction = 0.2;
    int max_iterations = 100;
    int patience = 25;
    std::uint64_t seed = 1;
    double fairness_factor = 0.9;
    std::size_t local_search_k = 5;
    FairnessMode fairness_mode = FairnessMode::PerGene;
    Selection selection = Selection::Elitist;

    void validate(std::size_t candidate_count) const;
};

struct GaResult {
    Chromosome best;
    std::vector<double> best_fitness_per_generation;
    int generations_run = 0;
    std::string stop_reason;

    bool operator==(const GaResult&) const = default;
};

/// RT + MR, scaled by `fairness_factor` when the task is queued.
double contribution(const GeneInfo& g, bool queued, double fairness_factor);

/// Sum of per-gene contributions. Summation runs in ascending task-id order so
/// the value is bitwise independent of gene order.
double fitness(std::span<const TaskId> genes, const GeneTable& tasks, const Queue& queue,
               double fairness_factor, FairnessMode mode = FairnessMode::PerGene);
double fitness(const Chromosome& c, const GeneTable& tasks, const Queue& queue,
               double fairness_factor, FairnessMode mode = FairnessMode::PerGene);

/// Throws InvalidArgument unless genes are distinct, drawn from `candidates`
/// and exactly `length` long.
void validate_chromosome(const Chromosome& c, std::span<const TaskId> candidates,
                         std::size_t length);

std::vector<Chromosome> init_population(std::span<const TaskId> candidates, const GaConfig& cfg,
                                        Rng& rng);
std::vector<Chromosome> init_population(std::span<const TaskId> candidates, const GaConfig& cfg);

/// Orders by (fitness, genes) and keeps the ceil(fraction * N) best.
std::vector<Chromosome> select_elite(std::vector<Chromosome> population, double elite_fraction);

/// Swaps genes in [a, b) between the parents, then repairs duplicates.
std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& p1, const Chromosome& p2,
                                               std::size_t a, std::size_t b);
/// Random cut points 0 < a < b <= L.
std::pair<Chromosome, Chromosome> crossover_two_point(const Chromosome& p1, const Chromosome& p2,
                                                      Rng& rng);

struct MutationOutcome {
    Chromosome result;
    std::optional<Chromosome> naive; // random replacement before local search
};

MutationOutcome mutate_with_local_search(const Chromosome& c, std::span<const TaskId> candidates,
                                         const GeneTable& tasks, const Queue& queue,
                                         const GaConfig& cfg, Rng& rng);

GaResult evolve(std::span<const TaskId> candidates, const GeneTable& tasks, const Queue& queue,
                const GaConfig& cfg);

struct Optimum {
    double fitness = 0.0;
    std::vector<TaskId> subset; // ascending ids
};

/// Largest candidate pool accepted by enumerate_optimum.
inline constexpr std::size_t kEnumerationBound = 20;

/// Exhaustive minimum over every `length`-subset; among equal fitness the
/// lexicographically smallest subset wins.
Optimum enumerate_optimum(std::span<const TaskId> candidates, const GeneTable& tasks,
                          const Queue& queue, std::size_t length, double fairness_factor,
                          FairnessMode mode = FairnessMode::PerGene);

/// `generation,best_fitness` rows.
std::string fitness_trace_csv(const GaResult& r);

} // namespace cloudsched::gata
