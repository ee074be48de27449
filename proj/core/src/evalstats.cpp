#include "geocond/evalstats.hpp"

#include <cmath>
#include <sstream>

#include "geocond/errors.hpp"

namespace geocond::stats {

double proportion(const BinaryImage& img) {
  std::size_t ones = 0;
  for (std::uint8_t v : img.data) ones += v;
  return static_cast<double>(ones) / static_cast<double>(img.pixel_count());
}

MeanImage mean_image(const std::vector<BinaryImage>& images) {
  if (images.empty()) throw ValidationError("mean_image: empty image list");
  const int h = images.front().height, w = images.front().width;
  MeanImage out;
  out.height = h;
  out.width = w;
  out.values.assign(static_cast<std::size_t>(h) * w, 0.0);

  for (const BinaryImage& img : images) {
    if (img.height != h || img.width != w)
      throw ValidationError("mean_image: images must share dimensions");
    for (std::size_t i = 0; i < img.data.size(); ++i) out.values[i] += img.data[i];
  }
  double global = 0.0;
  for (double& v : out.values) {
    v /= static_cast<double>(images.size());
    global += v;
  }
  global /= static_cast<double>(out.values.size());
  for (double v : out.values)
    out.max_mean_deviation = std::max(out.max_mean_deviation, std::abs(v - global));
  return out;
}

double diversity(const std::vector<BinaryImage>& realizations) {
  if (realizations.size() < 2)
    throw ValidationError("diversity needs at least 2 realizations");
  const int h = realizations.front().height, w = realizations.front().width;
  const double pixels = static_cast<double>(h) * w;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < realizations.size(); ++i) {
    if (realizations[i].height != h || realizations[i].width != w)
      throw ValidationError("diversity: images must share dimensions");
    for (std::size_t j = i + 1; j < realizations.size(); ++j) {
      std::size_t differing = 0;
      for (std::size_t p = 0; p < realizations[i].data.size(); ++p)
        differing += realizations[i].data[p] != realizations[j].data[p];
      sum += static_cast<double>(differing) / pixels;
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double compare_proportions(const std::vector<BinaryImage>& dataset,
                           const std::vector<BinaryImage>& samples) {
  if (dataset.empty() || samples.empty())
    throw ValidationError("compare_proportions: empty input");
  auto mean_prop = [](const std::vector<BinaryImage>& imgs) {
    double s = 0.0;
    for (const BinaryImage& img : imgs) s += proportion(img);
    return s / static_cast<double>(imgs.size());
  };
  return std::abs(mean_prop(dataset) - mean_prop(samples));
}

StatsReport summarize(const std::vector<BinaryImage>& images, bool with_diversity) {
  if (images.empty()) throw ValidationError("summarize: empty image list");
  StatsReport report;
  report.count = images.size();

  double sum = 0.0, sum_sq = 0.0;
  for (const BinaryImage& img : images) {
    const double p = proportion(img);
    sum += p;
    sum_sq += p * p;
  }
  report.mean_proportion = sum / static_cast<double>(images.size());
  const double var = sum_sq / static_cast<double>(images.size()) -
                     report.mean_proportion * report.mean_proportion;
  report.proportion_std = std::sqrt(std::max(0.0, var));
  report.mean = mean_image(images);
  if (with_diversity && images.size() >= 2) report.mean_pairwise_hamming = diversity(images);
  return report;
}

std::string StatsReport::render() const {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "count=" << count << "\n";
  out << "mean_proportion=" << mean_proportion << "\n";
  out << "proportion_std=" << proportion_std << "\n";
  out << "max_mean_deviation=" << mean.max_mean_deviation << "\n";
  if (mean_pairwise_hamming >= 0.0)
    out << "mean_pairwise_hamming=" << mean_pairwise_hamming << "\n";
  return out.str();
}

}  // namespace geocond::stats
