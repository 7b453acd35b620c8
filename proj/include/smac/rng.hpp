#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace smac {

// Counter-based RNG built on the splitmix64 mixer. Every stream is a pure
// function of (seed, stream_id, counter), so independent streams can be
// evaluated in any order (or concurrently) and still produce identical draws.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_(mix(seed ^ mix(stream_id + 0x9e3779b97f4a7c15ULL))) {}

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + (++counter_) * 0x9e3779b97f4a7c15ULL;
        return mix(z);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller; draws are generated in pairs
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    std::vector<double> normal_vec(int n) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = normal();
        return v;
    }

    int uniform_int(int n) {  // in [0, n)
        return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
    }

    std::uint64_t counter() const { return counter_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Standard-normal draws with provenance, used as the carrier for
// reparameterized sampling.
struct NoiseVector {
    std::vector<double> eps;
    std::uint64_t stream_id = 0;
    std::uint64_t counter = 0;

    static NoiseVector draw(RngStream& rng, int dim, std::uint64_t stream_id = 0) {
        NoiseVector nv;
        nv.stream_id = stream_id;
        nv.counter = rng.counter();
        nv.eps = rng.normal_vec(dim);
        return nv;
    }

    int dim() const { return static_cast<int>(eps.size()); }
};

}  // namespace smac
