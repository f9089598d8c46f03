#pragma once

#include <vector>

#include "ssag/ops.hpp"
#include "ssag/optimizer.hpp"
#include "ssag/rng.hpp"
#include "ssag/tensor.hpp"

namespace ssag {

// FIFO buffer of the m most recent generator hidden states. Slot j in 1..m is
// the state from j frames ago; underfull slots read as zero vectors, so early
// frames contribute nothing to the context.
class ContextQueue {
  public:
    ContextQueue(int capacity, int dim);

    int capacity() const { return m_; }
    int dim() const { return d_; }
    int fill() const { return fill_; }

    // s becomes the newest entry; the oldest is evicted when full
    void push(const std::vector<double>& s);
    void reset();

    // state from j frames ago (j in 1..m), zeros when older than the fill
    std::vector<double> entry(int j) const;

    // [s_{t-m}, ..., s_{t-1}] flattened oldest-first, zero-padded, length m*d
    std::vector<double> concat() const;

    // snapshot/restore so a training step can re-advance with updated weights
    struct Snapshot {
        std::vector<double> ring;
        int head;
        int fill;
    };
    Snapshot save() const;
    void load(const Snapshot& snap);

  private:
    int m_;
    int d_;
    int fill_ = 0;
    int head_ = 0; // ring index of the newest entry
    std::vector<double> ring_;
};

enum class GateMode { Scalar, Vector };

// Gated-attention parameters. The state embedding is shared across positions;
// each queue slot has its own gate row over the full concatenated queue.
// Gate rows are stored oldest-first to match ContextQueue::concat().
struct GceParams {
    int m = 0;
    int d = 0;
    GateMode gate_mode = GateMode::Scalar;
    Tensor embed;        // d x d
    Tensor gate_weights; // m x (m*d) scalar mode, (m*d) x (m*d) vector mode

    ParamList params(const std::string& prefix = "gce") const;
    std::size_t parameter_count() const;
};

GceParams init_gce(int m, int d, GateMode mode, Rng& rng);

// one gated attention unit: h = tanh(s_{t-j} . W_h), q = sigmoid(gate row over
// the whole queue), r = h * q.  j in 1..m, 1 = newest.
Tensor gau_forward(const ContextQueue& queue, const GceParams& params, int j);

// context vector c_t = sum over positions of the gated embeddings
Tensor gce_forward(const ContextQueue& queue, const GceParams& params);

// batched form over row-wise queue snapshots: rows x (m*d) -> rows x d
Tensor gce_forward_rows(const Tensor& queue_rows, const GceParams& params);

// single LSTM cell run over the queue oldest to newest; the final hidden
// state is the context vector
struct LstmParams {
    int d = 0;
    Tensor weight; // (2d) x (4d), gate order [input, forget, cell, output]
    Tensor bias;   // 4d

    ParamList params(const std::string& prefix = "lstm") const;
    std::size_t parameter_count() const;
};

LstmParams init_lstm(int d, Rng& rng);

Tensor lstm_context(const ContextQueue& queue, const LstmParams& params);
Tensor lstm_context_rows(const Tensor& queue_rows, const LstmParams& params, int m);

} // namespace ssag
