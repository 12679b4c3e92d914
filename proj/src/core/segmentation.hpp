#pragma once

#include <cstdint>
#include <vector>

#include "image.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "training.hpp"

namespace slc::seg {

using imaging::Image;
using imaging::Mask;

/// Brighten, grayscale, threshold, keep the largest 4-connected component.
/// With `invert` the lesion is the dark side of the threshold (typical of
/// dermoscopy, where the lesion is darker than skin).
Mask threshold_segment(const Image& img, const imaging::PiecewiseParams& params,
                       std::uint8_t threshold, bool invert = false);

/// Largest 4-connected foreground component; ties go to the one whose first
/// pixel comes first in row-major order.
Mask largest_component(const Mask& mask);

/// 2|A and B| / (|A| + |B|); two empty masks score 1.
double dice(const Mask& a, const Mask& b);

struct UNetConfig {
  std::size_t depth = 3;
  std::size_t base_channels = 8;
  std::size_t input_size = 64;
  std::size_t in_channels = 3;
};

void validate(const UNetConfig& cfg);

/// Encoder of `depth` levels, each two same-size conv+ReLU followed by a
/// 2x2 pool, a bottleneck of two convs, and a mirrored decoder that
/// upsamples, concatenates the matching encoder output (skip first) and runs
/// two convs. A 1x1 conv and sigmoid give a [1,S,S] probability map.
nn::NetworkSpec build_unet(const UNetConfig& cfg);

struct SegSample {
  Image image;
  Mask mask;
};

struct UNetTrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 4;
  train::AdamConfig adam{.lr = 3e-3};
  std::uint64_t seed = 0;
};

struct UNetTrainResult {
  nn::Weights weights;
  /// Mean Dice on the held-out set: entry 0 before training, then one per
  /// epoch.
  std::vector<double> dice_history;
  std::vector<double> loss_history;
};

/// Loss is soft Dice loss plus per-pixel binary cross-entropy, 1:1.
UNetTrainResult train_unet(const nn::NetworkSpec& spec, const UNetConfig& cfg,
                           const std::vector<SegSample>& train_set,
                           const std::vector<SegSample>& holdout,
                           const UNetTrainOptions& options, const train::LogFn& log = {});

/// Image must already be input_size square. A 3-channel image given to a
/// 1-channel net is converted to grayscale.
Mask predict_mask(const nn::NetworkSpec& spec, const nn::Weights& weights, const Image& img);
Tensor predict_probabilities(const nn::NetworkSpec& spec, const nn::Weights& weights,
                             const Image& img);

double mean_dice(const nn::NetworkSpec& spec, const nn::Weights& weights,
                 const std::vector<SegSample>& samples);

// --- synthetic data --------------------------------------------------------

struct DiscOptions {
  std::size_t size = 64;
  std::size_t channels = 3;
  /// Bright lesion on a dark field instead of a dark lesion on skin tone.
  bool bright_lesion = false;
  double min_radius = 0.15;  // fraction of size
  double max_radius = 0.35;
  /// Maximum axis ratio deviation; 0 draws circles.
  double ellipticity = 0.3;
  double noise = 8.0;  // std-dev in intensity units
};

/// A random ellipse and its exact mask (pixel centre inside the ellipse).
SegSample synthetic_disc(const DiscOptions& opt, SeededRng& rng);
std::vector<SegSample> synthetic_discs(std::size_t count, const DiscOptions& opt,
                                       SeededRng rng);

}  // namespace slc::seg
