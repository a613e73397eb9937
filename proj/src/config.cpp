#include "metaseg/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "metaseg/errors.hpp"

namespace metaseg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Cursor {
  const std::string& origin;
  std::size_t line;
  const std::string& key;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + key + ": " + what);
  }
};

std::uint64_t parse_u64(const std::string& v, const Cursor& at) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) at.fail("expected a non-negative integer, got '" + v + "'");
  return out;
}

std::size_t parse_size(const std::string& v, const Cursor& at, std::size_t min) {
  const auto n = parse_u64(v, at);
  if (n < min) at.fail("must be at least " + std::to_string(min));
  return static_cast<std::size_t>(n);
}

double parse_real(const std::string& v, const Cursor& at) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    at.fail("expected a finite number, got '" + v + "'");
  }
  return out;
}

double positive(const std::string& v, const Cursor& at) {
  const double x = parse_real(v, at);
  if (!(x > 0.0)) at.fail("must be positive");
  return x;
}

double non_negative(const std::string& v, const Cursor& at) {
  const double x = parse_real(v, at);
  if (x < 0.0) at.fail("must not be negative");
  return x;
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&, const Cursor&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"subset_size", [](RunConfig& c, const std::string& v, const Cursor& at) { c.subset_size = parse_size(v, at, 1); }},
      {"n_subsets", [](RunConfig& c, const std::string& v, const Cursor& at) { c.n_subsets = parse_size(v, at, 1); }},
      {"hist_bins", [](RunConfig& c, const std::string& v, const Cursor& at) { c.hist_bins = parse_size(v, at, 2); }},
      {"mi_bins", [](RunConfig& c, const std::string& v, const Cursor& at) { c.mi_bins = parse_size(v, at, 2); }},
      {"alpha",
       [](RunConfig& c, const std::string& v, const Cursor& at) {
         c.alpha = parse_real(v, at);
         if (!(c.alpha > 0.0 && c.alpha <= 1.0)) at.fail("must lie in (0, 1]");
       }},
      {"seed", [](RunConfig& c, const std::string& v, const Cursor& at) { c.seed = parse_u64(v, at); }},

      {"svr.C", [](RunConfig& c, const std::string& v, const Cursor& at) { c.svr.C = positive(v, at); }},
      {"svr.epsilon", [](RunConfig& c, const std::string& v, const Cursor& at) { c.svr.epsilon = non_negative(v, at); }},
      {"svr.tol", [](RunConfig& c, const std::string& v, const Cursor& at) { c.svr.tol = positive(v, at); }},
      {"svr.gamma",
       [](RunConfig& c, const std::string& v, const Cursor& at) {
         if (v == "scale") {
           c.svr.gamma.reset();
         } else {
           c.svr.gamma = positive(v, at);
         }
       }},

      {"mlp.epochs", [](RunConfig& c, const std::string& v, const Cursor& at) { c.mlp.epochs = parse_size(v, at, 0); }},
      {"mlp.batch", [](RunConfig& c, const std::string& v, const Cursor& at) { c.mlp.batch = parse_size(v, at, 1); }},
      {"mlp.lr", [](RunConfig& c, const std::string& v, const Cursor& at) { c.mlp.learning_rate = positive(v, at); }},
      {"mlp.optimizer",
       [](RunConfig& c, const std::string& v, const Cursor& at) {
         try {
           c.mlp.optimizer = metalearn::parse_optimizer(v);
         } catch (const Error& e) {
           at.fail(e.what());
         }
       }},
      {"mlp.dropout",
       [](RunConfig& c, const std::string& v, const Cursor& at) {
         c.mlp.dropout_rate = parse_real(v, at);
         if (!(c.mlp.dropout_rate >= 0.0 && c.mlp.dropout_rate < 1.0)) at.fail("must lie in [0, 1)");
       }},

      {"cv.train", [](RunConfig& c, const std::string& v, const Cursor& at) { c.cv_train = parse_size(v, at, 1); }},
      {"cv.test", [](RunConfig& c, const std::string& v, const Cursor& at) { c.cv_test = parse_size(v, at, 1); }},
      {"cv.folds", [](RunConfig& c, const std::string& v, const Cursor& at) { c.cv_folds = parse_size(v, at, 1); }},
      {"cv.mode",
       [](RunConfig& c, const std::string& v, const Cursor& at) {
         try {
           c.cv_mode = evaluation::parse_split_mode(v);
         } catch (const Error& e) {
           at.fail(e.what());
         }
       }},

      {"selector.epochs",
       [](RunConfig& c, const std::string& v, const Cursor& at) { c.selector.epochs = parse_size(v, at, 1); }},
      {"selector.lr",
       [](RunConfig& c, const std::string& v, const Cursor& at) { c.selector.learning_rate = positive(v, at); }},
      {"selector.lambda",
       [](RunConfig& c, const std::string& v, const Cursor& at) { c.selector.lambda = non_negative(v, at); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig c;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "svr" && section != "mlp" && section != "cv" && section != "selector") {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (name.empty()) throw ConfigError(where + "missing key");
    const std::string key = section.empty() ? name : section + "." + name;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    it->second(c, value, Cursor{origin, line_no, key});
  }
  return c;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string to_string(const RunConfig& c) {
  std::ostringstream out;
  out << "subset_size = " << c.subset_size << '\n'
      << "n_subsets = " << c.n_subsets << '\n'
      << "hist_bins = " << c.hist_bins << '\n'
      << "mi_bins = " << c.mi_bins << '\n'
      << "alpha = " << real(c.alpha) << '\n';
  if (c.seed) out << "seed = " << *c.seed << '\n';
  out << "\n[svr]\n"
      << "C = " << real(c.svr.C) << '\n'
      << "epsilon = " << real(c.svr.epsilon) << '\n'
      << "tol = " << real(c.svr.tol) << '\n'
      << "gamma = " << (c.svr.gamma ? real(*c.svr.gamma) : std::string("scale")) << '\n'
      << "\n[mlp]\n"
      << "epochs = " << c.mlp.epochs << '\n'
      << "batch = " << c.mlp.batch << '\n'
      << "lr = " << real(c.mlp.learning_rate) << '\n'
      << "optimizer = " << metalearn::optimizer_name(c.mlp.optimizer) << '\n'
      << "dropout = " << real(c.mlp.dropout_rate) << '\n'
      << "\n[cv]\n"
      << "train = " << c.cv_train << '\n'
      << "test = " << c.cv_test << '\n'
      << "mode = " << evaluation::split_mode_name(c.cv_mode) << '\n'
      << "folds = " << c.cv_folds << '\n'
      << "\n[selector]\n"
      << "epochs = " << c.selector.epochs << '\n'
      << "lr = " << real(c.selector.learning_rate) << '\n'
      << "lambda = " << real(c.selector.lambda) << '\n';
  return out.str();
}

}  // namespace metaseg
