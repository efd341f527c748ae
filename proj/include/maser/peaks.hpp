#pragma once

#include <cstddef>
#include <vector>

namespace maser {

struct PeakIndex {
    std::size_t index = 0;
    double height = 0.0;
    double prominence = 0.0;
    double offset = 0.0;  // parabolic refinement in samples, or half the plateau width
};

/// Interior local maxima with height >= min_height and topographic
/// prominence >= min_prominence, in index order. Flat tops report their
/// first sample.
std::vector<PeakIndex> find_peaks(const std::vector<double>& y, double min_height,
                                  double min_prominence);

}  // namespace maser
