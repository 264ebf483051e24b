#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "climssm/error.hpp"
#include "climssm/model.hpp"

namespace climssm::model {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view key, std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

int to_int(std::string_view key, std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

bool to_bool(std::string_view key, std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true/false");
}

std::vector<std::string_view> words(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto next = s.find(sep, pos);
    if (next == std::string_view::npos) next = s.size();
    const auto w = trim(s.substr(pos, next - pos));
    if (!w.empty()) out.push_back(w);
    pos = next + 1;
  }
  return out;
}

Prior to_prior(std::string_view key, std::string_view s) {
  const auto w = words(s, ' ');
  if (w.size() != 2) throw ConfigError("key '" + std::string(key) + "': expected '<mean> <variance>'");
  return {to_double(key, w[0]), to_double(key, w[1])};
}

std::string num(double v) { return format_double(v); }

std::string prior_text(const Prior& p) { return num(p.mean) + " " + num(p.variance); }

const std::set<std::string>& parameter_names() {
  static const std::set<std::string> names{"V",   "W_mu", "W_beta", "W_psi",   "W_X",
                                           "a_X", "b_X",  "W_phi",  "W_delta", "varphi"};
  return names;
}

}  // namespace

ModelConfig read_config(std::istream& in) {
  ModelConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(view.substr(0, eq)));
    const std::string_view value = trim(view.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");

    auto& p = cfg.params;
    auto& pr = cfg.priors;
    if (key == "K") cfg.layout.K = to_int(key, value);
    else if (key == "P") cfg.layout.P = to_int(key, value);
    else if (key == "forcing") cfg.layout.kind = parse_forcing_kind(value);
    else if (key == "influence.start") {
      const auto w = words(value, '-');
      if (w.size() != 2) throw ConfigError("influence.start must be MM-DD");
      cfg.influence.start_month = static_cast<unsigned>(to_int(key, w[0]));
      cfg.influence.start_day = static_cast<unsigned>(to_int(key, w[1]));
    }
    else if (key == "influence.length") cfg.influence.length_days = to_int(key, value);
    else if (key == "influence.taper") cfg.influence.taper_days = to_int(key, value);
    else if (key == "tie_psi") cfg.tie_psi = to_bool(key, value);
    else if (key == "V") p.V = to_double(key, value);
    else if (key == "W_mu") p.W_mu = to_double(key, value);
    else if (key == "W_beta") p.W_beta = to_double(key, value);
    else if (key == "W_psi") p.W_psi = to_double(key, value);
    else if (key == "W_X") p.W_X = to_double(key, value);
    else if (key == "a_X") p.a_X = to_double(key, value);
    else if (key == "b_X") p.b_X = to_double(key, value);
    else if (key == "W_phi") p.W_phi = to_double(key, value);
    else if (key == "W_delta") p.W_delta = to_double(key, value);
    else if (key == "varphi") p.varphi = to_double(key, value);
    else if (key == "prior.mu") pr.mu = to_prior(key, value);
    else if (key == "prior.beta") pr.beta = to_prior(key, value);
    else if (key == "prior.psi1") pr.psi1 = to_prior(key, value);
    else if (key == "prior.psi") pr.psi = to_prior(key, value);
    else if (key == "prior.X") pr.X = to_prior(key, value);
    else if (key == "prior.phi") pr.phi = to_prior(key, value);
    else if (key == "prior.phi_means") {
      pr.phi_means.clear();
      for (auto w : words(value, ',')) pr.phi_means.push_back(to_double(key, w));
    }
    else if (key == "prior.delta") pr.delta = to_prior(key, value);
    else if (key == "prior.delta_ac") pr.delta_ac = to_prior(key, value);
    else if (key == "fixed") {
      cfg.fixed.clear();
      for (auto w : words(value, ',')) {
        if (!parameter_names().count(std::string(w))) {
          throw ConfigError("fixed: unknown parameter '" + std::string(w) + "'");
        }
        cfg.fixed.emplace_back(w);
      }
    }
    else throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read model config '" + path.string() + "'");
  return read_config(in);
}

void write_config(const ModelConfig& c, std::ostream& out) {
  const auto& p = c.params;
  const auto& pr = c.priors;
  char start[8];
  std::snprintf(start, sizeof start, "%02u-%02u", c.influence.start_month, c.influence.start_day);
  out << "# model structure\n"
      << "K = " << c.layout.K << '\n'
      << "P = " << c.layout.P << '\n'
      << "forcing = " << to_string(c.layout.kind) << '\n'
      << "influence.start = " << start << '\n'
      << "influence.length = " << c.influence.length_days << '\n'
      << "influence.taper = " << c.influence.taper_days << '\n'
      << "tie_psi = " << (c.tie_psi ? "true" : "false") << '\n'
      << "# variance and forcing parameters\n"
      << "V = " << num(p.V) << '\n'
      << "W_mu = " << num(p.W_mu) << '\n'
      << "W_beta = " << num(p.W_beta) << '\n'
      << "W_psi = " << num(p.W_psi) << '\n'
      << "W_X = " << num(p.W_X) << '\n'
      << "a_X = " << num(p.a_X) << '\n'
      << "b_X = " << num(p.b_X) << '\n'
      << "W_phi = " << num(p.W_phi) << '\n'
      << "W_delta = " << num(p.W_delta) << '\n'
      << "varphi = " << num(p.varphi) << '\n'
      << "# initial state priors (mean variance)\n"
      << "prior.mu = " << prior_text(pr.mu) << '\n'
      << "prior.beta = " << prior_text(pr.beta) << '\n'
      << "prior.psi1 = " << prior_text(pr.psi1) << '\n'
      << "prior.psi = " << prior_text(pr.psi) << '\n'
      << "prior.X = " << prior_text(pr.X) << '\n'
      << "prior.phi = " << prior_text(pr.phi) << '\n';
  if (!pr.phi_means.empty()) {
    out << "prior.phi_means = ";
    for (std::size_t i = 0; i < pr.phi_means.size(); ++i) out << (i ? "," : "") << num(pr.phi_means[i]);
    out << '\n';
  }
  out << "prior.delta = " << prior_text(pr.delta) << '\n'
      << "prior.delta_ac = " << prior_text(pr.delta_ac) << '\n';
  if (!c.fixed.empty()) {
    out << "fixed = ";
    for (std::size_t i = 0; i < c.fixed.size(); ++i) out << (i ? "," : "") << c.fixed[i];
    out << '\n';
  }
}

void save_config(const ModelConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model config '" + path.string() + "'");
  write_config(config, out);
}

}  // namespace climssm::model
