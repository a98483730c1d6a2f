#include "parnn/parallel.hpp"

#include <atomic>
#include <barrier>
#include <chrono>
#include <functional>
#include <mutex>
#include <thread>

#include "parnn/error.hpp"

namespace parnn {

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "ngsgd") return OptimizerKind::ngsgd;
    fail("optimizer: expected 'sgd' or 'ngsgd', got '", s, "'");
}

std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::sgd ? "sgd" : "ngsgd";
}

namespace {

// Tree sum over [lo, hi) by midpoint splits. The shape depends only on
// the index range, never on arrival order.
Vector tree_sum(const std::vector<ParamVector>& contributions, std::size_t lo,
                std::size_t hi) {
    if (hi - lo == 1) return contributions[lo].data;
    const std::size_t mid = lo + (hi - lo) / 2;
    Vector left = tree_sum(contributions, lo, mid);
    const Vector right = tree_sum(contributions, mid, hi);
    for (std::size_t i = 0; i < left.size(); ++i) left[i] += right[i];
    return left;
}

} // namespace

ParamVector allreduce_average(const std::vector<ParamVector>& contributions,
                              std::size_t m) {
    if (m == 0) fail("allreduce_average: m must be >= 1");
    if (contributions.size() != m) {
        fail("allreduce_average: got ", contributions.size(),
             " contributions for m = ", m);
    }
    const std::size_t len = contributions[0].size();
    for (std::size_t r = 1; r < m; ++r) {
        if (contributions[r].size() != len) {
            fail("allreduce_average: rank ", r, " vector length ",
                 contributions[r].size(), " differs from rank 0 length ", len);
        }
    }
    ParamVector avg;
    avg.data = tree_sum(contributions, 0, m);
    const double inv = 1.0 / static_cast<double>(m);
    for (double& x : avg.data) x *= inv;
    return avg;
}

std::vector<Dataset> partition_data(const Dataset& dataset, std::size_t m,
                                    std::uint64_t seed) {
    if (m == 0) fail("partition_data: m must be >= 1");
    if (m > dataset.size()) {
        fail("partition_data: m = ", m, " exceeds dataset size ", dataset.size());
    }
    const auto idx = shuffled_indices(dataset.size(), seed);
    const std::size_t shard_size = dataset.size() / m;
    std::vector<Dataset> shards;
    shards.reserve(m);
    for (std::size_t r = 0; r < m; ++r) {
        const std::vector<std::size_t> rows(idx.begin() + r * shard_size,
                                            idx.begin() + (r + 1) * shard_size);
        shards.push_back(dataset.select(rows));
    }
    return shards;
}

namespace {

struct WorkerState {
    std::size_t rank = 0;
    MlpModel model;
    NgState ng;
    Dataset shard;
    Rng rng{0};
    std::size_t updates_since_avg = 0;
    std::size_t epoch_avg_events = 0;
    double epoch_ce_sum = 0.0;
    std::size_t epoch_batches = 0;
};

using AvgFn = std::function<void(WorkerState&)>;

// One epoch of local updates for one worker. Averaging is delegated so
// the serial and threaded paths share every arithmetic step.
void worker_epoch(WorkerState& w, std::size_t epoch, const TrainOptions& opts,
                  const ParallelPlan& plan, double newbob_lr, const AvgFn& average) {
    const auto batches = minibatches(w.shard, plan.minibatch, w.rng.next_u64());
    w.epoch_ce_sum = 0.0;
    w.epoch_batches = batches.size();
    w.epoch_avg_events = 0;

    LrSchedule exp_sched = make_schedule(LrVariant::exponential, opts.lr_init,
                                         opts.epochs);
    for (std::size_t b = 0; b < batches.size(); ++b) {
        double lr = newbob_lr;
        if (opts.lr_schedule == LrVariant::exponential) {
            double progress = (static_cast<double>(epoch) +
                               static_cast<double>(b) /
                                   static_cast<double>(batches.size())) /
                              static_cast<double>(opts.epochs);
            if (progress > 1.0) progress = 1.0;
            lr = exponential_lr(exp_sched, progress);
        }

        const Minibatch& mb = batches[b];
        const ForwardTrace trace = forward(w.model, mb.features);
        w.epoch_ce_sum += cross_entropy(trace, mb.labels);

        GradientSet grads;
        if (opts.optimizer == OptimizerKind::ngsgd) {
            BackpropContext ctx;
            grads = backward_with_context(w.model, trace, mb.labels, ctx);
            ng_update_state(w.ng, trace, ctx);
            grads = ng_precondition(w.ng, grads);
        } else {
            grads = backward(w.model, trace, mb.labels);
        }
        sgd_step_in_place(w.model, grads, lr);

        if (++w.updates_since_avg == plan.avg_frequency) {
            average(w);
            w.updates_since_avg = 0;
            ++w.epoch_avg_events;
        }
    }
    // Forced epoch-boundary averaging, unless an interval event already
    // synchronized on the very last update.
    if (w.updates_since_avg > 0) {
        average(w);
        w.updates_since_avg = 0;
        ++w.epoch_avg_events;
    }
}

struct WorkerFailure {
    std::mutex mutex;
    std::atomic<bool> failed{false};
    std::size_t rank = 0;
    std::string message;

    void record(std::size_t r, const std::string& msg) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!failed.load()) {
            rank = r;
            message = msg;
            failed.store(true);
        }
    }
};

TrainResult train_loop(const ParallelPlan& plan, const MlpModel& model0,
                       const Dataset& train, const Dataset& cv,
                       const TrainOptions& opts, bool threaded) {
    if (plan.workers == 0) fail("train_parallel: workers must be >= 1");
    if (plan.avg_frequency == 0) fail("train_parallel: avg_frequency must be >= 1");
    if (plan.minibatch == 0) fail("train_parallel: minibatch must be >= 1");
    if (opts.epochs > 0 && cv.size() == 0) fail("train_parallel: empty CV set");

    const std::size_t m = plan.workers;
    auto shards = partition_data(train, m, plan.base_seed);

    std::vector<WorkerState> workers(m);
    for (std::size_t r = 0; r < m; ++r) {
        workers[r].rank = r;
        workers[r].model = model0;
        workers[r].ng = ng_init(model0, opts.ng_decay, opts.ng_smoothing);
        workers[r].shard = std::move(shards[r]);
        workers[r].rng = Rng(plan.base_seed + r);
    }

    LrSchedule sched = make_schedule(opts.lr_schedule, opts.lr_init, opts.epochs);

    TrainResult result;
    result.model = model0;
    double prev_cv_acc = 0.0;
    bool have_prev = false;

    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        const double newbob_lr = sched.newbob_lr;
        const auto t0 = std::chrono::steady_clock::now();

        if (!threaded) {
            AvgFn average = [m](WorkerState& w) {
                std::vector<ParamVector> one{flatten(w.model)};
                w.model = unflatten(allreduce_average(one, m), w.model);
            };
            worker_epoch(workers[0], epoch, opts, plan, newbob_lr, average);
        } else {
            std::vector<ParamVector> slots(m);
            std::barrier<> sync(static_cast<std::ptrdiff_t>(m));
            WorkerFailure failure;

            AvgFn average = [&](WorkerState& w) {
                slots[w.rank] = flatten(w.model);
                sync.arrive_and_wait();
                if (failure.failed.load()) {
                    fail("aborted by failure on another rank");
                }
                const ParamVector avg = allreduce_average(slots, m);
                w.model = unflatten(avg, w.model);
                sync.arrive_and_wait();
            };

            std::vector<std::thread> threads;
            threads.reserve(m);
            for (std::size_t r = 0; r < m; ++r) {
                threads.emplace_back([&, r] {
                    try {
                        worker_epoch(workers[r], epoch, opts, plan, newbob_lr,
                                     average);
                    } catch (const std::exception& e) {
                        failure.record(r, e.what());
                        sync.arrive_and_drop();
                    }
                });
            }
            for (auto& t : threads) t.join();
            if (failure.failed.load()) {
                fail("train_parallel: worker rank ", failure.rank,
                     " failed: ", failure.message);
            }
        }

        const auto t1 = std::chrono::steady_clock::now();
        const double wall = std::chrono::duration<double>(t1 - t0).count();
        result.total_wall_seconds += wall;

        double ce_sum = 0.0;
        std::size_t batch_count = 0;
        for (const auto& w : workers) {
            ce_sum += w.epoch_ce_sum;
            batch_count += w.epoch_batches;
        }

        const double cv_acc = accuracy(workers[0].model, cv.features, cv.labels);

        EpochMetrics rec;
        rec.epoch = epoch + 1;
        rec.lr = opts.lr_schedule == LrVariant::newbob
                     ? newbob_lr
                     : exponential_lr(sched, static_cast<double>(epoch) /
                                                 static_cast<double>(opts.epochs));
        rec.train_ce = batch_count > 0 ? ce_sum / static_cast<double>(batch_count) : 0.0;
        rec.cv_accuracy = cv_acc;
        rec.wall_seconds = wall;
        rec.workers = m;
        rec.avg_events = workers[0].epoch_avg_events;
        result.metrics.push_back(rec);

        if (opts.lr_schedule == LrVariant::newbob && have_prev) {
            const NewbobDecision decision = newbob_next(sched, prev_cv_acc, cv_acc);
            if (decision.stop) {
                prev_cv_acc = cv_acc;
                break;
            }
        }
        prev_cv_acc = cv_acc;
        have_prev = true;
    }

    result.model = workers[0].model;
    return result;
}

} // namespace

TrainResult train_parallel(const ParallelPlan& plan, const MlpModel& model0,
                           const Dataset& train, const Dataset& cv,
                           const TrainOptions& opts) {
    return train_loop(plan, model0, train, cv, opts, true);
}

TrainResult serial_train(const MlpModel& model0, const Dataset& train,
                         const Dataset& cv, const TrainOptions& opts,
                         std::size_t minibatch, std::uint64_t base_seed) {
    ParallelPlan plan;
    plan.workers = 1;
    plan.avg_frequency = 1;
    plan.minibatch = minibatch;
    plan.base_seed = base_seed;
    return train_loop(plan, model0, train, cv, opts, false);
}

} // namespace parnn
