#pragma once

#include <vector>

#include "refref/renderer.hpp"

namespace refref {

/// Mean squared color error over the three channels.
double photometric_loss(const Vec3& rendered, const Vec3& target);
/// d(photometric_loss)/d(rendered).
Vec3 photometric_loss_gradient(const Vec3& rendered, const Vec3& target);

/// Distortion regularizer over normalized distances: the pairwise
/// midpoint-separation term plus the per-interval self term. `corrected`
/// restricts both sums to samples outside the refractive object.
/// The pairwise term uses the O(N) prefix-sum identity.
double distortion_loss(const SampleSet& samples, const std::vector<double>& weights,
                       bool corrected);

/// d(distortion_loss)/d(weights); zero for excluded samples.
std::vector<double> distortion_loss_gradient(const SampleSet& samples,
                                             const std::vector<double>& weights,
                                             bool corrected);

}  // namespace refref
