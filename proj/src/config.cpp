#include "config.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace tiltwork::cli {
namespace {

using nlohmann::json;

VectorXd json_vector(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array of numbers");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(field, "expected a non-empty array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

MatrixXd json_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty 2-D array");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ConfigError(field, "expected a non-empty 2-D array");
  MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(field, "rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(field, "expected numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

double json_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  return j.get<double>();
}

// Raw key/value view shared by both syntaxes.
struct RawConfig {
  std::map<std::string, json> fields;
};

RawConfig from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("<document>", "expected a JSON object");
  RawConfig raw;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() == "channel") {
      if (!it.value().is_object()) throw ConfigError("channel", "expected an object");
      for (auto c = it.value().begin(); c != it.value().end(); ++c) raw.fields["channel." + c.key()] = c.value();
    } else {
      raw.fields[it.key()] = it.value();
    }
  }
  return raw;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

json parse_flat_row(const std::string& text, const std::string& field) {
  json row = json::array();
  std::string cleaned = text;
  for (char& c : cleaned) {
    if (c == ',' || c == '[' || c == ']') c = ' ';
  }
  std::istringstream in(cleaned);
  std::string token;
  while (in >> token) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0' || errno == ERANGE) {
      throw ConfigError(field, "cannot parse number '" + token + "'");
    }
    row.push_back(v);
  }
  return row;
}

// Flat form: `key = numbers`; matrix rows are separated by ';'.
RawConfig from_flat(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("<line " + std::to_string(line_no) + ">", "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.find(';') != std::string::npos) {
      json m = json::array();
      std::istringstream rows(value);
      std::string row;
      while (std::getline(rows, row, ';')) {
        if (!trim(row).empty()) m.push_back(parse_flat_row(row, key));
      }
      raw.fields[key] = m;
    } else {
      json row = parse_flat_row(value, key);
      const bool scalar_key = key == "beta" || key == "k" || key == "temperature";
      if (scalar_key && row.size() == 1) {
        raw.fields[key] = row[0];
      } else if (key == "distortion" || key == "distortion_2" || key == "observable" ||
                 key == "channel.transition") {
        raw.fields[key] = json::array({row});  // single-row matrix
      } else {
        raw.fields[key] = row;
      }
    }
  }
  return raw;
}

void check_probs(const VectorXd& v, const std::string& field) {
  try {
    check_probability_vector(v, field);
  } catch (const Error& e) {
    throw ConfigError(field, e.what());
  }
}

void check_shape(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const std::string& field) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ConfigError(field, "expected " + std::to_string(rows) + " x " + std::to_string(cols) +
                                 " matrix, got " + std::to_string(m.rows()) + " x " + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw ConfigError(field, "entries must be finite");
}

}  // namespace

ProblemConfig parse_config(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  const RawConfig raw = first != std::string::npos && text[first] == '{' ? from_json(text) : from_flat(text);

  static const char* const kKnown[] = {"source_probs", "coding_probs", "distortion", "distortion_2",
                                       "observable", "channel.transition", "channel.input_probs",
                                       "beta", "k", "temperature"};
  for (const auto& [key, value] : raw.fields) {
    bool known = false;
    for (const char* k : kKnown) known = known || key == k;
    if (!known) throw ConfigError(key, "unknown field");
  }
  auto has = [&](const char* key) { return raw.fields.count(key) > 0; };

  ProblemConfig cfg;
  if (has("source_probs")) cfg.source_probs = json_vector(raw.fields.at("source_probs"), "source_probs");
  if (has("coding_probs")) cfg.coding_probs = json_vector(raw.fields.at("coding_probs"), "coding_probs");
  if (has("distortion")) cfg.distortion = json_matrix(raw.fields.at("distortion"), "distortion");
  if (has("distortion_2")) cfg.distortion_2 = json_matrix(raw.fields.at("distortion_2"), "distortion_2");
  if (has("observable")) cfg.observable = json_matrix(raw.fields.at("observable"), "observable");
  if (has("channel.transition") || has("channel.input_probs")) {
    if (!has("channel.transition")) throw ConfigError("channel.transition", "missing");
    if (!has("channel.input_probs")) throw ConfigError("channel.input_probs", "missing");
    cfg.channel = ChannelConfig{json_matrix(raw.fields.at("channel.transition"), "channel.transition"),
                                json_vector(raw.fields.at("channel.input_probs"), "channel.input_probs")};
  }
  if (has("k")) cfg.k = json_number(raw.fields.at("k"), "k");
  if (has("temperature")) cfg.temperature = json_number(raw.fields.at("temperature"), "temperature");
  if (!(cfg.k > 0)) throw ConfigError("k", "must be positive");
  if (!(cfg.temperature > 0)) throw ConfigError("temperature", "must be positive");
  const double implied_beta = 1 / (cfg.k * cfg.temperature);
  cfg.beta = implied_beta;
  if (has("beta")) {
    cfg.beta = json_number(raw.fields.at("beta"), "beta");
    if (!(cfg.beta > 0)) throw ConfigError("beta", "must be positive");
    if (has("temperature") && std::abs(cfg.beta - implied_beta) > 1e-12 * implied_beta) {
      throw ConfigError("beta", "inconsistent with 1 / (k temperature)");
    }
  }

  if (cfg.source_probs) check_probs(*cfg.source_probs, "source_probs");
  if (cfg.coding_probs) check_probs(*cfg.coding_probs, "coding_probs");
  if (cfg.distortion) {
    if (!cfg.source_probs) throw ConfigError("source_probs", "required when distortion is given");
    const Eigen::Index cols = cfg.coding_probs ? cfg.coding_probs->size() : cfg.distortion->cols();
    check_shape(*cfg.distortion, cfg.source_probs->size(), cols, "distortion");
    if (cfg.distortion_2) check_shape(*cfg.distortion_2, cfg.source_probs->size(), cols, "distortion_2");
    if (cfg.observable) check_shape(*cfg.observable, cfg.source_probs->size(), cols, "observable");
  } else if (cfg.distortion_2 || cfg.observable) {
    throw ConfigError("distortion", "required when distortion_2 or observable is given");
  }
  if (cfg.channel) {
    check_probs(cfg.channel->input_probs, "channel.input_probs");
    if (cfg.channel->transition.rows() != cfg.channel->input_probs.size()) {
      throw ConfigError("channel.transition", "needs one row per input letter");
    }
    for (Eigen::Index r = 0; r < cfg.channel->transition.rows(); ++r) {
      check_probs(cfg.channel->transition.row(r).transpose(), "channel.transition");
    }
  }
  return cfg;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace tiltwork::cli
