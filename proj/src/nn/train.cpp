#include <algorithm>
#include <numeric>

#include "propforge/error.hpp"
#include "propforge/nn/mlp.hpp"

namespace propforge::nn {

void TrainSchedule::validate() const {
    if (epochs < 1) throw DomainError("TrainSchedule: epochs must be >= 1");
    if (batch_size < 1) throw DomainError("TrainSchedule: batch_size must be >= 1");
    if (!(lr_initial > 0.0)) throw DomainError("TrainSchedule: lr_initial must be positive");
    if (lr_drop_epoch > epochs) throw DomainError("TrainSchedule: lr_drop_epoch exceeds epochs");
    if (!(lr_drop_factor > 0.0)) throw DomainError("TrainSchedule: lr_drop_factor must be positive");
}

double TrainSchedule::learning_rate(std::size_t epoch) const {
    return epoch >= lr_drop_epoch ? lr_initial * lr_drop_factor : lr_initial;
}

std::vector<double> train_batches(MlpModel& m, std::size_t sample_count, const TrainSchedule& schedule,
                                  std::uint64_t seed, const BatchBuilder& build, const EpochCallback& on_epoch) {
    if (sample_count == 0) throw DomainError("train: empty dataset");
    schedule.validate();
    const std::size_t batch = std::min(schedule.batch_size, sample_count);
    std::mt19937_64 rng(seed);
    AdamState adam = AdamState::for_model(m);
    std::vector<std::size_t> order(sample_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> history;
    history.reserve(schedule.epochs);
    std::vector<std::size_t> idx;
    for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        const double lr = schedule.learning_rate(epoch);
        double weighted = 0.0;
        for (std::size_t start = 0; start < sample_count; start += batch) {
            const std::size_t stop = std::min(sample_count, start + batch);
            idx.assign(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(stop));
            const auto [inputs, targets] = build(idx, rng);
            const Gradients g = backward(m, inputs, targets);
            adam_step(adam, m, g, lr);
            weighted += g.loss * static_cast<double>(stop - start);
        }
        history.push_back(weighted / static_cast<double>(sample_count));
        if (on_epoch) on_epoch(epoch, history.back());
    }
    return history;
}

std::vector<double> train(MlpModel& m, const Matrix& inputs, const Matrix& targets, const TrainSchedule& schedule,
                          std::uint64_t seed, const EpochCallback& on_epoch) {
    if (inputs.cols() != targets.cols()) throw DomainError("train: input/target sample counts differ");
    auto build = [&](const std::vector<std::size_t>& idx, std::mt19937_64&) {
        Matrix x(inputs.rows(), static_cast<Eigen::Index>(idx.size()));
        Matrix t(targets.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            x.col(static_cast<Eigen::Index>(k)) = inputs.col(static_cast<Eigen::Index>(idx[k]));
            t.col(static_cast<Eigen::Index>(k)) = targets.col(static_cast<Eigen::Index>(idx[k]));
        }
        return std::pair{std::move(x), std::move(t)};
    };
    return train_batches(m, static_cast<std::size_t>(inputs.cols()), schedule, seed, build, on_epoch);
}

}  // namespace propforge::nn
