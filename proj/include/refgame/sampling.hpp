#pragma once

#include <cmath>
#include <stdexcept>

#include "refgame/rng.hpp"
#include "refgame/tensor.hpp"

namespace refgame {

struct CategoricalDraw {
  int index = 0;
  double log_prob = 0.0;
};

/// Rejects anything that is not a probability vector: wrong rank,
/// negative/NaN entries, or mass off from 1 by more than 1e-6.
inline void validate_distribution(const Tensor& probs) {
  if (probs.shape.size() != 1 || probs.size() == 0)
    throw std::invalid_argument("distribution must be a non-empty vector");
  double sum = 0.0;
  for (long i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0))
      throw std::invalid_argument("distribution has a negative or NaN entry");
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("distribution mass is " + std::to_string(sum) + ", not 1");
}

/// Lowest index wins ties, so greedy decoding is reproducible.
inline int argmax_index(const Tensor& probs) {
  int best = 0;
  for (long i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = static_cast<int>(i);
  return best;
}

/// Inverse-CDF draw. Zero-probability entries are never selected, and
/// the tiny tail left by round-off falls back to the last positive one.
inline CategoricalDraw sample_categorical(const Tensor& probs, Rng& rng) {
  validate_distribution(probs);
  const double u = rng.next_double();
  double cum = 0.0;
  int last_positive = -1;
  for (long i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    cum += probs[i];
    if (u < cum) return {last_positive, std::log(probs[i])};
  }
  if (last_positive < 0) throw std::invalid_argument("distribution has no positive entry");
  return {last_positive, std::log(probs[last_positive])};
}

inline CategoricalDraw greedy_draw(const Tensor& probs) {
  validate_distribution(probs);
  const int i = argmax_index(probs);
  return {i, std::log(probs[i])};
}

}  // namespace refgame
