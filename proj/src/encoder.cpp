#include "pointgpe/encoder.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>

namespace pointgpe {

namespace {

// shortest decimal form that parses back to the same double
std::string render_double(double value) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

uint64_t fnv1a64(const std::string& text) {
  uint64_t hash = 0xCBF29CE484222325ull;
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001B3ull;
  }
  return hash;
}

}  // namespace

std::string to_string(AggregationMode mode) {
  return mode == AggregationMode::additive_squared ? "paper-literal" : "multiplicative";
}

AggregationMode aggregation_mode_from_string(const std::string& name) {
  if (name == "paper-literal") return AggregationMode::additive_squared;
  if (name == "multiplicative") return AggregationMode::multiplicative;
  throw std::invalid_argument("unknown aggregation mode '" + name +
                              "' (expected paper-literal or multiplicative)");
}

std::string to_string(GroupStdMode mode) {
  return mode == GroupStdMode::pooled ? "pooled" : "per-dimension";
}

GroupStdMode group_std_mode_from_string(const std::string& name) {
  if (name == "pooled") return GroupStdMode::pooled;
  if (name == "per-dimension") return GroupStdMode::per_dimension;
  throw std::invalid_argument("unknown group std mode '" + name +
                              "' (expected pooled or per-dimension)");
}

void EncoderConfig::validate() const {
  if (refs_per_axis < 1) throw std::invalid_argument("EncoderConfig: refs_per_axis must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("EncoderConfig: sigma must be positive and finite");
  if (neighbors < 1) throw std::invalid_argument("EncoderConfig: neighbors must be >= 1");
  if (stages < 1) throw std::invalid_argument("EncoderConfig: stages must be >= 1");
  if (!stage_sigma.empty()) {
    if (static_cast<int>(stage_sigma.size()) != stages)
      throw std::invalid_argument("EncoderConfig: stage_sigma needs one entry per stage");
    for (const double s : stage_sigma)
      if (!(s > 0.0) || !std::isfinite(s))
        throw std::invalid_argument("EncoderConfig: stage_sigma entries must be positive");
  }
}

std::vector<std::pair<std::string, std::string>> EncoderConfig::to_key_values() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("refs-per-axis", std::to_string(refs_per_axis));
  kv.emplace_back("sigma", render_double(sigma));
  kv.emplace_back("k", std::to_string(neighbors));
  kv.emplace_back("stages", std::to_string(stages));
  kv.emplace_back("agg-mode", to_string(aggregation));
  kv.emplace_back("normalize-input", normalize_input ? "true" : "false");
  kv.emplace_back("clamp-k", clamp_k ? "true" : "false");
  kv.emplace_back("group-std", to_string(group_std));
  std::string override_list;
  for (size_t i = 0; i < stage_sigma.size(); ++i) {
    if (i) override_list += ",";
    override_list += render_double(stage_sigma[i]);
  }
  kv.emplace_back("stage-sigma", override_list);
  return kv;
}

std::string EncoderConfig::fingerprint() const {
  std::string canonical;
  for (const auto& [key, value] : to_key_values()) {
    canonical += key;
    canonical += '=';
    canonical += value;
    canonical += '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  return buf;
}

}  // namespace pointgpe
