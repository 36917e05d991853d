#include "cloudsched/scheduler.hpp"

#include "cloudsched/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace cloudsched::sched {

const QueueEntry* WaitingQueue::find(TaskId id) const
{
    const auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
}

void WaitingQueue::defer(TaskId id, std::size_t round, double now, int class_id)
{
    auto [it, inserted] = entries_.try_emplace(id, QueueEntry{round, now, class_id});
    if (!inserted)
        it->second.last_class = class_id;
}

void WaitingQueue::remove(TaskId id)
{
    entries_.erase(id);
}

std::vector<TaskId> WaitingQueue::ids() const
{
    std::vector<TaskId> out;
    out.reserve(entries_.size());
    for (const auto& [id, e] : entries_)
        out.push_back(id);
    return out;
}

gata::Queue WaitingQueue::as_set() const
{
    gata::Queue q;
    q.reserve(entries_.size());
    for (const auto& [id, e] : entries_)
        q.insert(id);
    return q;
}

std::vector<n2tc::TaskClassAssignment> promote_waiting(std::vector<n2tc::TaskClassAssignment> assignments,
                                                       const WaitingQueue& queue)
{
    for (auto& a : assignments) {
        const auto* entry = queue.find(a.task_id);
        if (!entry)
            continue;
        const int base = std::min(a.class_id, entry->last_class);
        a.class_id = std::max(1, base - 1);
    }
    return assignments;
}

std::vector<TaskId> select_candidates(std::span<const n2tc::TaskClassAssignment> assignments,
                                      int idle_resources)
{
    if (idle_resources < 0)
        throw InvalidArgument("select_candidates: idle_resources must be >= 0");
    std::vector<TaskId> out;
    for (int cls = 1; cls <= 3; ++cls) {
        if (cls > 1 && !(idle_resources > static_cast<int>(out.size())))
            break;
        for (const auto& a : assignments) {
            if (a.class_id == cls)
                out.push_back(a.task_id);
        }
    }
    return out;
}

gata::GeneTable build_gene_table(std::span<const Task> candidates, double now,
                                 const workload::FeatureScaler& scaler, const n2tc::ParamWeights& wp)
{
    gata::GeneTable table;
    if (candidates.empty())
        return table;
    double max_rt = 0.0;
    double max_mr = 0.0;
    for (const auto& t : candidates) {
        max_rt = std::max(max_rt, std::max(0.0, now - t.arrival) + t.exec_time);
        max_mr = std::max(max_mr, static_cast<double>(t.resource_demand));
    }
    table.reserve(candidates.size());
    for (const auto& t : candidates) {
        gata::GeneInfo g;
        g.response_time = (std::max(0.0, now - t.arrival) + t.exec_time) / max_rt;
        g.resources = static_cast<double>(t.resource_demand) / max_mr;
        g.weight = n2tc::task_weight(scaler.apply(t), wp);
        table.emplace(t.id, g);
    }
    return table;
}

std::vector<TaskId> admit_within_capacity(std::span<const TaskId> ordered,
                                          std::span<const Task> pending, sim::SlotPool slots)
{
    std::vector<TaskId> out;
    for (TaskId id : ordered) {
        const auto it = std::find_if(pending.begin(), pending.end(),
                                     [&](const Task& t) { return t.id == id; });
        if (it == pending.end())
            throw InvalidArgument("admit_within_capacity: task " + std::to_string(id) +
                                  " is not pending");
        if (slots.try_take(it->resource_demand))
            out.push_back(id);
    }
    return out;
}

std::array<std::size_t, 3> RoundPlan::class_sizes() const
{
    std::array<std::size_t, 3> sizes{0, 0, 0};
    for (const auto& a : classified)
        ++sizes[static_cast<std::size_t>(a.class_id - 1)];
    return sizes;
}

RoundPlan schedule_round(std::span<const Task> pending, WaitingQueue& queue,
                         const n2tc::NeuralModel& model, const sim::ResourceTable& table,
                         const RoundContext& ctx, const SchedulerConfig& cfg)
{
    if (!model.trained())
        throw InvalidArgument("schedule_round: the classifier has not been trained");
    if (!ctx.scaler)
        throw InvalidArgument("schedule_round: no feature scaler supplied");
    table.check_consistency();

    RoundPlan plan;
    plan.round = ctx.round;
    plan.now = ctx.now;

    TaskSet normalized;
    normalized.normalized = true;
    normalized.tasks.reserve(pending.size());
    for (const auto& t : pending)
        normalized.tasks.push_back(ctx.scaler->apply(t));

    auto classified = n2tc::classify(model, normalized);
    for (std::size_t i = 0; i < classified.size(); ++i)
        classified[i].weight = n2tc::task_weight(normalized.tasks[i], cfg.wp);
    plan.classified = promote_waiting(std::move(classified), queue);

    plan.idle = sim::idle_count(table);
    plan.candidates = select_candidates(plan.classified, plan.idle);

    std::vector<TaskId> admitted;
    if (plan.idle > 0 && !plan.candidates.empty()) {
        std::vector<Task> candidate_tasks;
        candidate_tasks.reserve(plan.candidates.size());
        for (TaskId id : plan.candidates) {
            const auto it = std::find_if(pending.begin(), pending.end(),
                                         [&](const Task& t) { return t.id == id; });
            candidate_tasks.push_back(*it);
        }
        const auto genes = build_gene_table(candidate_tasks, ctx.now, *ctx.scaler, cfg.wp);
        const auto waiting = queue.as_set();

        const std::size_t length = std::min(cfg.ga.chrom_len, static_cast<std::size_t>(plan.idle));
        std::vector<TaskId> picked;
        if (plan.candidates.size() <= length) {
            picked = plan.candidates;
        }
        else {
            auto ga_cfg = cfg.ga;
            ga_cfg.chrom_len = length;
            ga_cfg.seed = cfg.ga.seed + ctx.round;
            plan.ga = gata::evolve(plan.candidates, genes, waiting, ga_cfg);
            picked = plan.ga->best.genes;
        }

        // cheapest contributions claim slots first
        std::vector<std::pair<double, TaskId>> order;
        order.reserve(picked.size());
        for (TaskId id : picked)
            order.emplace_back(gata::contribution(genes.at(id), waiting.contains(id),
                                                  cfg.ga.fairness_factor),
                               id);
        std::sort(order.begin(), order.end());
        std::vector<TaskId> ordered;
        for (const auto& [c, id] : order)
            ordered.push_back(id);
        admitted = admit_within_capacity(ordered, pending, table.free_slots());

        plan.chosen.genes = admitted;
        if (!admitted.empty())
            plan.chosen.fitness = gata::fitness(admitted, genes, waiting, cfg.ga.fairness_factor,
                                                cfg.ga.fairness_mode);
    }

    const std::unordered_set<TaskId> chosen(admitted.begin(), admitted.end());
    const std::unordered_set<TaskId> offered(plan.candidates.begin(), plan.candidates.end());
    for (TaskId id : plan.candidates) {
        if (!chosen.contains(id))
            plan.deferred.push_back(id);
    }
    for (const auto& a : plan.classified) {
        if (!offered.contains(a.task_id))
            plan.unadmitted.push_back(a.task_id);
    }

    std::unordered_map<TaskId, int> class_of;
    for (const auto& a : plan.classified)
        class_of.emplace(a.task_id, a.class_id);
    for (TaskId id : admitted)
        queue.remove(id);
    for (TaskId id : plan.deferred)
        queue.defer(id, ctx.round, ctx.now, class_of.at(id));
    for (TaskId id : plan.unadmitted)
        queue.defer(id, ctx.round, ctx.now, class_of.at(id));
    return plan;
}

std::string round_log_line(const RoundPlan& plan)
{
    const auto sizes = plan.class_sizes();
    nlohmann::json j = {{"round", plan.round},
                        {"now", plan.now},
                        {"idle", plan.idle},
                        {"class_sizes", {sizes[0], sizes[1], sizes[2]}},
                        {"candidates", plan.candidates},
                        {"chosen", plan.chosen.genes},
                        {"deferred", plan.deferred},
                        {"unadmitted", plan.unadmitted}};
    if (plan.ga)
        j["best_fitness"] = plan.ga->best.fitness;
    else if (!plan.chosen.genes.empty())
        j["best_fitness"] = plan.chosen.fitness;
    else
        j["best_fitness"] = nullptr;
    j["ga_generations"] = plan.ga ? plan.ga->generations_run : 0;
    return j.dump();
}

ProposedPolicy::ProposedPolicy(n2tc::NeuralModel model, workload::FeatureScaler scaler,
                               SchedulerConfig cfg)
    : model_(std::move(model)), scaler_(scaler), cfg_(std::move(cfg))
{
    if (!model_.trained())
        throw InvalidArgument("ProposedPolicy: the classifier has not been trained");
}

std::vector<TaskId> ProposedPolicy::select(std::span<const Task> pending,
                                           const sim::ResourceTable& table, double now)
{
    RoundContext ctx{plans_.size(), now, &scaler_};
    plans_.push_back(schedule_round(pending, queue_, model_, table, ctx, cfg_));
    return plans_.back().chosen.genes;
}

} // namespace cloudsched::sched
