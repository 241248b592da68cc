#include "fzsg/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fzsg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  require(ec == std::errc() && ptr == last, ErrorCode::invalid_argument,
          "bad value for " + key + ": '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  fail(ErrorCode::invalid_argument, "bad boolean for " + key + ": '" + value + "'");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k{
      "thr_other",        "thr_skin",          "working_width",      "erode_radius",   "median_window",
      "interior_fraction", "post_open_radius", "post_close_radius", "top_k_components", "min_lesion_fraction",
      "n_trees",          "features_per_split", "seed",              "normalized_rgb", "threads",
      "model",            "trace",             "overlay"};
  return k;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "thr_other") seg.thr_other = parse_number<double>(key, value);
  else if (key == "thr_skin") seg.thr_skin = parse_number<double>(key, value);
  else if (key == "working_width") seg.working_width = parse_number<int>(key, value);
  else if (key == "erode_radius") seg.erode_radius = parse_number<int>(key, value);
  else if (key == "median_window") seg.median_window = parse_number<int>(key, value);
  else if (key == "interior_fraction") seg.interior_fraction = parse_number<double>(key, value);
  else if (key == "post_open_radius") seg.post_open_radius = parse_number<int>(key, value);
  else if (key == "post_close_radius") seg.post_close_radius = parse_number<int>(key, value);
  else if (key == "top_k_components") seg.top_k_components = parse_number<int>(key, value);
  else if (key == "min_lesion_fraction") seg.min_lesion_fraction = parse_number<double>(key, value);
  else if (key == "n_trees") n_trees = parse_number<int>(key, value);
  else if (key == "features_per_split") features_per_split = parse_number<int>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "normalized_rgb") normalized_rgb = parse_bool(key, value);
  else if (key == "threads") threads = parse_number<int>(key, value);
  else if (key == "model") model = value;
  else if (key == "trace") trace = parse_bool(key, value);
  else if (key == "overlay") overlay = parse_bool(key, value);
  else fail(ErrorCode::invalid_argument, "unknown configuration key '" + key + "'");
  seg.threads = threads;
}

void RunConfig::load_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::invalid_argument,
            "line " + std::to_string(lineno) + ": expected key = value");
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  load_text(ss.str());
}

std::string RunConfig::dump() const {
  std::string out;
  auto line = [&](const char* k, const std::string& v) { out += std::string(k) + " = " + v + '\n'; };
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  line("thr_other", num(seg.thr_other));
  line("thr_skin", num(seg.thr_skin));
  line("working_width", std::to_string(seg.working_width));
  line("erode_radius", std::to_string(seg.erode_radius));
  line("median_window", std::to_string(seg.median_window));
  line("interior_fraction", num(seg.interior_fraction));
  line("post_open_radius", std::to_string(seg.post_open_radius));
  line("post_close_radius", std::to_string(seg.post_close_radius));
  line("top_k_components", std::to_string(seg.top_k_components));
  line("min_lesion_fraction", num(seg.min_lesion_fraction));
  line("n_trees", std::to_string(n_trees));
  line("features_per_split", std::to_string(features_per_split));
  line("seed", std::to_string(seed));
  line("normalized_rgb", flag(normalized_rgb));
  line("threads", std::to_string(threads));
  line("model", model);
  line("trace", flag(trace));
  line("overlay", flag(overlay));
  return out;
}

void RunConfig::validate() const {
  seg.validate();
  require(n_trees >= 1, ErrorCode::invalid_argument, "n_trees must be >= 1");
  require(features_per_split >= 1 && features_per_split <= 159, ErrorCode::invalid_argument,
          "features_per_split must lie in [1,159]");
  require(threads >= 1, ErrorCode::invalid_argument, "threads must be >= 1");
}

}  // namespace fzsg
