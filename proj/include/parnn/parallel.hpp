#ifndef PARNN_PARALLEL_HPP
#define PARNN_PARALLEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "parnn/data.hpp"
#include "parnn/network.hpp"
#include "parnn/optimizer.hpp"

namespace parnn {

enum class OptimizerKind { sgd, ngsgd };

OptimizerKind optimizer_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

/// How the workers run: m workers, an averaging event every n local
/// minibatch updates, minibatch size, and the seed that derives the
/// data partition and the per-worker RNG streams (base_seed + rank).
struct ParallelPlan {
    std::size_t workers = 1;
    std::size_t avg_frequency = 10;
    std::size_t minibatch = 128;
    std::uint64_t base_seed = 0;
};

/// Training knobs shared by the serial and parallel loops. lr_init is
/// used as given; worker-proportional scaling is the caller's decision.
struct TrainOptions {
    OptimizerKind optimizer = OptimizerKind::ngsgd;
    LrVariant lr_schedule = LrVariant::exponential;
    double lr_init = 0.32;
    std::size_t epochs = 15;
    double ng_decay = 0.95;
    double ng_smoothing = 4.0;
};

struct EpochMetrics {
    std::size_t epoch = 0; // 1-based in reports
    double lr = 0.0;
    double train_ce = 0.0;
    double cv_accuracy = 0.0;
    double wall_seconds = 0.0;
    std::size_t workers = 1;
    std::size_t avg_events = 0;
};

struct TrainResult {
    MlpModel model;
    std::vector<EpochMetrics> metrics;
    double total_wall_seconds = 0.0;
};

/// Mean of the contributions, summed over a fixed rank-ordered binary
/// tree so the result is bitwise deterministic and independent of
/// arrival timing. Every caller with the same inputs sees the identical
/// vector.
ParamVector allreduce_average(const std::vector<ParamVector>& contributions,
                              std::size_t m);

/// One global shuffle by seed, then m contiguous shards of floor(N/m)
/// examples each; the remainder is dropped. Shards are disjoint.
std::vector<Dataset> partition_data(const Dataset& dataset, std::size_t m,
                                    std::uint64_t seed);

/// Runs m concurrent workers over private shards; every avg_frequency
/// local updates (and at every epoch boundary) the workers synchronize
/// on a blocking all-reduce that replaces each model with the average.
/// Cross-validation accuracy is evaluated each epoch on the averaged
/// model and drives the learning rate schedule.
TrainResult train_parallel(const ParallelPlan& plan, const MlpModel& model0,
                           const Dataset& train, const Dataset& cv,
                           const TrainOptions& opts);

/// Single-process baseline: the identical update/averaging arithmetic
/// with one worker, run inline without threads.
TrainResult serial_train(const MlpModel& model0, const Dataset& train,
                         const Dataset& cv, const TrainOptions& opts,
                         std::size_t minibatch, std::uint64_t base_seed);

} // namespace parnn

#endif
