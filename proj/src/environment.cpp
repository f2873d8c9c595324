#include "banditbench/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace banditbench {

Eigen::VectorXd random_unit_vector(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = standard_normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

ClassificationEnvironment::ClassificationEnvironment(
    std::shared_ptr<const data::LabeledDataset> dataset, data::ContextPipeline pipeline,
    std::uint64_t shuffle_seed)
    : dataset_(data::shuffle(*dataset, shuffle_seed)), pipeline_(pipeline) {
  if (dataset_.num_classes < 2) {
    throw std::invalid_argument("classification stream needs at least 2 classes");
  }
}

int ClassificationEnvironment::context_dim() const {
  return pipeline_.encoded_dim(dataset_.raw_dim(), dataset_.num_classes);
}

Round ClassificationEnvironment::next() {
  if (cursor_ >= dataset_.size()) throw std::out_of_range("dataset exhausted");
  const auto row = static_cast<Eigen::Index>(cursor_);
  Round round;
  round.label = dataset_.labels[cursor_];
  round.contexts = pipeline_.encode(dataset_.features.row(row).transpose(),
                                    dataset_.num_classes, &zero_rows_);
  round.expected.assign(static_cast<std::size_t>(dataset_.num_classes), 0.0);
  round.expected[static_cast<std::size_t>(round.label)] = 1.0;
  round.realized = round.expected;
  ++cursor_;
  return round;
}

SyntheticEnvironment::SyntheticEnvironment(const SyntheticSpec& spec, bool duplicate_half,
                                           std::uint64_t seed)
    : spec_(spec),
      duplicate_half_(duplicate_half),
      context_rng_(mix_seed(seed, stream::kData)),
      noise_rng_(mix_seed(seed, stream::kNoise)) {
  if (spec.num_arms < 1 || spec.raw_dim < 1 || spec.noise < 0.0) {
    throw std::invalid_argument("SyntheticSpec: invalid arms, dimension or noise");
  }
  Rng direction_rng(mix_seed(seed, stream::kInit));
  direction_ = random_unit_vector(spec.raw_dim, direction_rng);
}

double SyntheticEnvironment::reward_function(const Eigen::VectorXd& raw) const {
  const double s = raw.dot(direction_);
  return spec_.reward == SyntheticReward::cosine ? std::cos(spec_.frequency * s) : s;
}

Round SyntheticEnvironment::next() {
  Round round;
  const auto k = static_cast<std::size_t>(spec_.num_arms);
  round.contexts.reserve(k);
  round.expected.resize(k);
  round.realized.resize(k);
  for (std::size_t a = 0; a < k; ++a) {
    const Eigen::VectorXd raw = random_unit_vector(spec_.raw_dim, context_rng_);
    round.expected[a] = reward_function(raw);
    // Noise is drawn for every arm so the stream does not depend on choices.
    round.realized[a] = round.expected[a] + spec_.noise * standard_normal(noise_rng_);
    round.contexts.push_back(duplicate_half_ ? data::duplicate_half(raw) : raw);
  }
  return round;
}

}  // namespace banditbench
