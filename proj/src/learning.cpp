#include "wim/learning.hpp"

#include <algorithm>

namespace wim {

void TrainConfig::validate() const {
    if (!(step_size >= 0.0) || !std::isfinite(step_size)) throw Error("TrainConfig: step_size must be >= 0");
    if (epochs < 1) throw Error("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw Error("TrainConfig: batch_size must be >= 1");
    if (!(l2_weight >= 0.0)) throw Error("TrainConfig: l2_weight must be >= 0");
    if (!(decay_offset > 0.0)) throw Error("TrainConfig: decay_offset must be > 0");
    if (chain_steps < 3 || chain_steps % 2 == 0)
        throw Error("TrainConfig: chain_steps must be odd and >= 3");
}

double step_at(const TrainConfig& config, std::size_t t) {
    const double tau = config.decay_offset;
    const double td = static_cast<double>(t);
    double step = config.step_size;
    switch (config.schedule) {
        case StepSchedule::constant:
            return step;
        case StepSchedule::inverse_t:
            step *= tau / (tau + td);
            break;
        case StepSchedule::inverse_sqrt_t:
            step *= std::sqrt(tau / (tau + td));
            break;
    }
    return std::max(step, config.step_floor);
}

void clip_inf_norm(Vector& g, double bound) {
    if (bound <= 0.0 || g.size() == 0) return;
    const double m = g.cwiseAbs().maxCoeff();
    if (m > bound) g *= bound / m;
}

GradientPair batch_update(std::span<const GradientPair> grads, double step, double clip) {
    if (grads.empty()) throw Error("batch_update: empty batch");
    GradientPair mean{Vector::Zero(grads[0].g1.size()), Vector::Zero(grads[0].g2.size())};
    for (const auto& g : grads) {
        mean.g1 += g.g1;
        mean.g2 += g.g2;
    }
    const double inv = 1.0 / static_cast<double>(grads.size());
    mean.g1 *= inv;
    mean.g2 *= inv;
    clip_inf_norm(mean.g1, clip);
    clip_inf_norm(mean.g2, clip);
    mean.g1 *= step;
    mean.g2 *= step;
    return mean;
}

}  // namespace wim
