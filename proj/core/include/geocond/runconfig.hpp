#pragma once

#include <filesystem>
#include <string>

#include "geocond/gan.hpp"
#include "geocond/inpaint.hpp"
#include "geocond/obm.hpp"

namespace geocond {

/// Unified run configuration, loaded from UTF-8 JSON. Unknown keys are
/// rejected so hyperparameter typos cannot pass silently.
struct RunConfig {
  std::uint64_t seed = 42;
  int workers = 0;  // 0 = all hardware threads
  obm::ObmParams obm;
  int obm_count = 1000;
  gan::GanConfig gan;
  inpaint::InpaintConfig inpaint;

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text, const std::string& source_name);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON rendering with every effective field explicit; equal
/// configurations render identically.
std::string canonical_json(const RunConfig& config);

/// FNV-1a 64 of the canonical rendering, as fixed-width hex.
std::string config_hash(const RunConfig& config);

}  // namespace geocond
