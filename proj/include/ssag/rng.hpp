#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace ssag {

// Deterministic random stream. mt19937_64 is bit-specified by the standard and
// the distributions below are implemented here rather than taken from
// <random>, so identical seeds give identical streams on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform double in [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive integer range
    int uniform_int(int lo, int hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(eng_() % span);
    }

    // standard normal via Box-Muller, one value per call
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // pick an index according to a row of probabilities summing to ~1
    int sample_categorical(const std::vector<double>& probs) {
        double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }

    // engine state round-trips as text for checkpoint resume
    std::string save_state() const {
        std::ostringstream os;
        os << eng_;
        if (have_spare_) os << " 1 " << spare_;
        else os << " 0 0";
        return os.str();
    }

    void load_state(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
        int flag = 0;
        is >> flag >> spare_;
        have_spare_ = (flag != 0);
    }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace ssag
