#pragma once

#include "glassbox/dataset.hpp"

#include <cstdint>

namespace glassbox {

/// Two Gaussian blobs with identity covariance. Positives are shifted by
/// `shift` along the first `informative` axes; the remaining axes are noise.
struct BlobOptions {
  std::size_t negatives = 20000;
  std::size_t positives = 200;
  std::size_t features = 10;
  std::size_t informative = 5;
  double shift = 1.5;
  std::uint64_t seed = 0;
};

Dataset make_blobs(const BlobOptions& options);

/// x0, x1 uniform on [-1, 1] plus optional noise columns; label 1 when the
/// signs of x0 and x1 disagree.
Dataset make_xor(std::size_t n, std::uint64_t seed, std::size_t noise_features = 0);

/// Standard normal features; the label is Bernoulli(sigmoid(strength * sum of
/// the first `informative` features)). The other columns carry no signal.
Dataset make_monotone(std::size_t n, std::size_t features, std::size_t informative, double strength,
                      std::uint64_t seed);

/// Label from an additive logit 2 sin(3 x0) + 3 x1^2 - 1 with no interaction.
Dataset make_additive(std::size_t n, std::uint64_t seed);

}  // namespace glassbox
