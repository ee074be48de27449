#pragma once

#include <string>
#include <vector>

#include "geocond/image.hpp"

namespace geocond::stats {

/// Fraction of channel pixels (value 1).
double proportion(const BinaryImage& img);

struct MeanImage {
  int height = 0;
  int width = 0;
  std::vector<double> values;       // per-pixel mean of binary values
  double max_mean_deviation = 0.0;  // max |pixel mean - global mean proportion|
};

MeanImage mean_image(const std::vector<BinaryImage>& images);

/// Mean pairwise normalized Hamming distance over thresholded realizations.
double diversity(const std::vector<BinaryImage>& realizations);

/// |mean proportion(dataset) - mean proportion(samples)|.
double compare_proportions(const std::vector<BinaryImage>& dataset,
                           const std::vector<BinaryImage>& samples);

struct StatsReport {
  std::size_t count = 0;
  double mean_proportion = 0.0;
  double proportion_std = 0.0;
  MeanImage mean;
  double mean_pairwise_hamming = -1.0;  // -1 when fewer than 2 images

  /// Line-oriented key=value rendering (the mean image itself is exported
  /// separately as PGM).
  std::string render() const;
};

StatsReport summarize(const std::vector<BinaryImage>& images, bool with_diversity);

}  // namespace geocond::stats
