#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "iontrap/constants.hpp"

namespace iontrap {

struct HistogramBin {
    double center = 0.0;
    std::uint64_t count = 0;
};

/// Left-closed bins [k*w, (k+1)*w) anchored at multiples of the bin width;
/// empty bins inside the occupied range are included. Counts sum to the
/// sample count.
inline std::vector<HistogramBin> build_histogram(const std::vector<double>& samples,
                                                 double bin_width) {
    if (!(bin_width > 0.0)) throw DomainError("bin width must be positive");
    if (samples.size() < 2) throw DomainError("histogram needs at least 2 samples");
    long long lo = 0, hi = 0;
    bool first = true;
    for (double x : samples) {
        const long long k = (long long)std::floor(x / bin_width);
        if (first || k < lo) lo = first ? k : std::min(lo, k);
        if (first || k > hi) hi = first ? k : std::max(hi, k);
        first = false;
    }
    std::vector<HistogramBin> bins(std::size_t(hi - lo + 1));
    for (std::size_t i = 0; i < bins.size(); ++i)
        bins[i].center = (double(lo + (long long)i) + 0.5) * bin_width;
    for (double x : samples) {
        const long long k = (long long)std::floor(x / bin_width);
        ++bins[std::size_t(k - lo)].count;
    }
    return bins;
}

} // namespace iontrap
