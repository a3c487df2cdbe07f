#include "jsi/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace jsi {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename N>
N parse_number(const std::string& key, const std::string& v) {
  N out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw std::invalid_argument("bad value for " + key + ": '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty())
    throw std::invalid_argument("bad value for " + key + ": '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument("bad value for " + key + ": '" + v + "'");
}

std::string fmt_real(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str(), path.string());
}

void TrainConfig::set(const std::string& key, const std::string& v) {
  if (key == "scale") scale = parse_number<int>(key, v);
  else if (key == "batch") batch = parse_number<int>(key, v);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "steps") steps = parse_number<std::int64_t>(key, v);
  else if (key == "steps_per_epoch") steps_per_epoch = parse_real(key, v);
  else if (key == "lr") lr = parse_real(key, v);
  else if (key == "grad_clip") grad_clip = parse_real(key, v);
  else if (key == "checkpoint_every") checkpoint_every = parse_number<std::int64_t>(key, v);
  else if (key == "lambda_rec") weights.rec = parse_real(key, v);
  else if (key == "lambda_adv") weights.adv = parse_real(key, v);
  else if (key == "lambda_fm") weights.fm = parse_real(key, v);
  else if (key == "lambda_d") weights.d = parse_real(key, v);
  else if (key == "features") features = parse_number<int>(key, v);
  else if (key == "decomposition") decomposition = decomposition_mode_from_string(v);
  else if (key == "guided_radius") guided.radius = parse_number<int>(key, v);
  else if (key == "guided_eps") guided.eps = parse_real(key, v);
  else if (key == "disc_channels") disc_channels = parse_number<int>(key, v);
  else if (key == "disc_fc_width") disc_fc_width = parse_number<int>(key, v);
  else if (key == "disc_final_bn") disc_final_bn = parse_bool(key, v);
  else if (key == "precision") {
    if (v != "float" && v != "double")
      throw std::invalid_argument("precision must be float or double, got '" + v + "'");
    precision = v;
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

void TrainConfig::apply(const KeyValues& kv) {
  for (const auto& [k, v] : kv) set(k, v);
}

KeyValues TrainConfig::to_key_values() const {
  return {{"scale", std::to_string(scale)},
          {"batch", std::to_string(batch)},
          {"seed", std::to_string(seed)},
          {"steps", std::to_string(steps)},
          {"steps_per_epoch", fmt_real(steps_per_epoch)},
          {"lr", fmt_real(lr)},
          {"grad_clip", fmt_real(grad_clip)},
          {"checkpoint_every", std::to_string(checkpoint_every)},
          {"lambda_rec", fmt_real(weights.rec)},
          {"lambda_adv", fmt_real(weights.adv)},
          {"lambda_fm", fmt_real(weights.fm)},
          {"lambda_d", fmt_real(weights.d)},
          {"features", std::to_string(features)},
          {"decomposition", to_string(decomposition)},
          {"guided_radius", std::to_string(guided.radius)},
          {"guided_eps", fmt_real(guided.eps)},
          {"disc_channels", std::to_string(disc_channels)},
          {"disc_fc_width", std::to_string(disc_fc_width)},
          {"disc_final_bn", disc_final_bn ? "true" : "false"},
          {"precision", precision}};
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_key_values()) out += k + " = " + v + "\n";
  return out;
}

void TrainConfig::validate() const {
  if (scale != 2 && scale != 4)
    throw std::invalid_argument("scale must be 2 or 4, got " + std::to_string(scale));
  if (batch < 2) throw std::invalid_argument("batch must be at least 2 (batch norm)");
  if (steps < 0) throw std::invalid_argument("steps must be nonnegative");
  if (steps_per_epoch < 0 || lr < 0 || grad_clip < 0 || checkpoint_every < 0)
    throw std::invalid_argument("schedule values must be nonnegative");
  weights.validate();
  generator().validate();
}

GeneratorConfig TrainConfig::generator() const {
  GeneratorConfig g;
  g.scale = scale;
  g.features = features;
  g.mode = decomposition;
  g.guided = guided;
  return g;
}

DiscriminatorConfig TrainConfig::discriminator(int hr_side) const {
  DiscriminatorConfig d;
  d.base_channels = disc_channels;
  d.input_size = hr_side;
  d.fc_width = disc_fc_width;
  d.final_bn = disc_final_bn;
  return d;
}

Schedule TrainConfig::schedule(Phase phase) const {
  Schedule s = default_schedule(phase);
  if (lr > 0) s.base_lr = lr;
  return s;
}

double TrainConfig::effective_steps_per_epoch(Phase phase) const {
  if (steps_per_epoch > 0) return steps_per_epoch;
  const double total = default_schedule(phase).total_epochs;
  return steps > 0 ? static_cast<double>(steps) / total : 1.0;
}

}  // namespace jsi
