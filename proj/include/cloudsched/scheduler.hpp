#pragma once

#include "cloudsched/gata.hpp"
#include "cloudsched/n2tc.hpp"
#include "cloudsched/simenv.hpp"
#include "cloudsched/workload.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cloudsched::sched {

struct QueueEntry {
    std::size_t entered_round = 0;
    double since = 0.0;
    int last_class = 3; // class held when last deferred, after promotion
};

/// Tasks left over from earlier rounds. Membership drives both class
/// promotion and the fitness discount.
class WaitingQueue {
public:
    bool contains(TaskId id) const { return entries_.contains(id); }
    const QueueEntry* find(TaskId id) const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Inserts a new member or refreshes the class of an existing one.
    void defer(TaskId id, std::size_t round, double now, int class_id);
    void remove(TaskId id);

    std::vector<TaskId> ids() const;
    gata::Queue as_set() const;

private:
    std::map<TaskId, QueueEntry> entries_;
};

/// Queued tasks move up one class from the better of their fresh class and
/// the class they held when deferred; class 1 is the floor.
std::vector<n2tc::TaskClassAssignment> promote_waiting(std::vector<n2tc::TaskClassAssignment> assignments,
                                                       const WaitingQueue& queue);

/// Class 1 first; lower classes are appended while idle resources outnumber
/// the accumulated candidates.
std::vector<TaskId> select_candidates(std::span<const n2tc::TaskClassAssignment> assignments,
                                      int idle_resources);

/// RT = wait so far + execution time, MR = slot demand; both divided by their
/// maximum over the candidates. Weight is the normalized task weight.
gata::GeneTable build_gene_table(std::span<const Task> candidates, double now,
                                 const workload::FeatureScaler& scaler, const n2tc::ParamWeights& wp);

/// Greedy first-fit admission in the given order; skips tasks that do not fit.
std::vector<TaskId> admit_within_capacity(std::span<const TaskId> ordered,
                                          std::span<const Task> pending, sim::SlotPool slots);

struct SchedulerConfig {
    n2tc::ParamWeights wp;
    gata::GaConfig ga;
};

struct RoundPlan {
    std::size_t round = 0;
    double now = 0.0;
    int idle = 0;
    std::vector<n2tc::TaskClassAssignment> classified; // after promotion
    std::vector<TaskId> candidates;
    gata::Chromosome chosen;
    std::vector<TaskId> deferred;   // candidates not chosen
    std::vector<TaskId> unadmitted; // classified but never offered to the GA
    std::optional<gata::GaResult> ga;

    std::array<std::size_t, 3> class_sizes() const;
    bool operator==(const RoundPlan&) const = default;
};

struct RoundContext {
    std::size_t round = 0;
    double now = 0.0;
    const workload::FeatureScaler* scaler = nullptr;
};

/// One pass of classify -> promote -> gate on idle slots -> GA. Updates
/// `queue` so that deferred and unadmitted tasks wait for the next round.
RoundPlan schedule_round(std::span<const Task> pending, WaitingQueue& queue,
                         const n2tc::NeuralModel& model, const sim::ResourceTable& table,
                         const RoundContext& ctx, const SchedulerConfig& cfg);

/// JSON object on a single line.
std::string round_log_line(const RoundPlan& plan);

class ProposedPolicy final : public sim::Policy {
public:
    ProposedPolicy(n2tc::NeuralModel model, workload::FeatureScaler scaler, SchedulerConfig cfg);

    sim::PolicyId id() const override { return sim::PolicyId::Proposed; }
    std::vector<TaskId> select(std::span<const Task> pending, const sim::ResourceTable& table,
                               double now) override;

    const std::vector<RoundPlan>& plans() const { return plans_; }
    const WaitingQueue& queue() const { return queue_; }

private:
    n2tc::NeuralModel model_;
    workload::FeatureScaler scaler_;
    SchedulerConfig cfg_;
    WaitingQueue queue_;
    std::vector<RoundPlan> plans_;
};

} // namespace cloudsched::sched
