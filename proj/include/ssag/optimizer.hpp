#pragma once

#include <string>
#include <vector>

#include "ssag/tensor.hpp"

namespace ssag {

// Named view over a group of learnable tensors. Order is the identity used by
// the optimizer moments and the checkpoint, so it must be stable.
struct NamedParam {
    std::string name;
    Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

std::size_t param_count(const ParamList& params);
void zero_grads(ParamList& params);

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moments are index-aligned with the param list
// handed to init(); the step counter increases by one per apply().
class AdamState {
  public:
    AdamState() = default;
    explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

    void init(const ParamList& params);
    bool initialized() const { return !m_.empty() || t_ > 0; }

    // applies one update from the accumulated grads, then zeroes them
    void step(ParamList& params);

    AdamConfig& config() { return cfg_; }
    const AdamConfig& config() const { return cfg_; }
    std::uint64_t step_count() const { return t_; }

    // checkpoint access
    std::vector<std::vector<double>>& moments1() { return m_; }
    std::vector<std::vector<double>>& moments2() { return v_; }
    const std::vector<std::vector<double>>& moments1() const { return m_; }
    const std::vector<std::vector<double>>& moments2() const { return v_; }
    void set_step_count(std::uint64_t t) { t_ = t; }

  private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::uint64_t t_ = 0;
};

void adam_step(ParamList& params, AdamState& state);

} // namespace ssag
