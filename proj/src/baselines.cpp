#include "cloudsched/baselines.hpp"

#include "cloudsched/error.hpp"
#include "cloudsched/scheduler.hpp"

#include <algorithm>

namespace cloudsched::baselines {

std::vector<TaskId> fifo_select(std::span<const Task> pending, sim::SlotPool slots)
{
    std::vector<const Task*> order;
    order.reserve(pending.size());
    for (const auto& t : pending)
        order.push_back(&t);
    std::stable_sort(order.begin(), order.end(), [](const Task* a, const Task* b) {
        return a->arrival != b->arrival ? a->arrival < b->arrival : a->id < b->id;
    });

    std::vector<TaskId> chosen;
    for (const Task* t : order) {
        if (!slots.try_take(t->resource_demand))
            break;
        chosen.push_back(t->id);
    }
    return chosen;
}

std::vector<TaskId> fifo_select(std::span<const Task> pending, int idle_slots)
{
    return fifo_select(pending, sim::SlotPool::single(idle_slots));
}

std::vector<TaskId> sjf_select(std::span<const Task> pending, sim::SlotPool slots)
{
    std::vector<const Task*> order;
    order.reserve(pending.size());
    for (const auto& t : pending)
        order.push_back(&t);
    std::stable_sort(order.begin(), order.end(), [](const Task* a, const Task* b) {
        return a->exec_time != b->exec_time ? a->exec_time < b->exec_time : a->id < b->id;
    });

    std::vector<TaskId> chosen;
    for (const Task* t : order) {
        if (slots.try_take(t->resource_demand))
            chosen.push_back(t->id);
    }
    return chosen;
}

std::vector<TaskId> sjf_select(std::span<const Task> pending, int idle_slots)
{
    return sjf_select(pending, sim::SlotPool::single(idle_slots));
}

std::vector<TaskId> roulette_select(std::span<const TaskId> candidates, const gata::GeneTable& tasks,
                                    gata::GaConfig cfg)
{
    cfg.selection = gata::Selection::Roulette;
    cfg.max_iterations = std::min(cfg.max_iterations, kRouletteGenerations);
    cfg.fairness_factor = 1.0;
    const gata::Queue none;
    return gata::evolve(candidates, tasks, none, cfg).best.genes;
}

std::vector<TaskId> FifoPolicy::select(std::span<const Task> pending, const sim::ResourceTable& table,
                                       double)
{
    return fifo_select(pending, table.free_slots());
}

std::vector<TaskId> SjfPolicy::select(std::span<const Task> pending, const sim::ResourceTable& table,
                                      double)
{
    return sjf_select(pending, table.free_slots());
}

std::vector<TaskId> RouletteGaPolicy::select(std::span<const Task> pending,
                                             const sim::ResourceTable& table, double now)
{
    const int idle = sim::idle_count(table);
    if (idle <= 0 || pending.empty())
        return {};
    std::vector<TaskId> candidates;
    candidates.reserve(pending.size());
    for (const auto& t : pending)
        candidates.push_back(t.id);

    const auto genes = sched::build_gene_table(pending, now, scaler_, wp_);
    const std::size_t length = std::min(cfg_.chrom_len, static_cast<std::size_t>(idle));
    std::vector<TaskId> picked;
    if (candidates.size() <= length) {
        picked = candidates;
    }
    else {
        auto cfg = cfg_;
        cfg.chrom_len = length;
        cfg.seed = cfg_.seed + round_;
        picked = roulette_select(candidates, genes, cfg);
    }
    ++round_;

    std::vector<std::pair<double, TaskId>> order;
    for (TaskId id : picked)
        order.emplace_back(gata::contribution(genes.at(id), false, 1.0), id);
    std::sort(order.begin(), order.end());
    std::vector<TaskId> ordered;
    for (const auto& [c, id] : order)
        ordered.push_back(id);
    return sched::admit_within_capacity(ordered, pending, table.free_slots());
}

} // namespace cloudsched::baselines
