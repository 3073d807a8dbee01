#include "tempervi/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tempervi/errors.hpp"

namespace tempervi {

namespace {

constexpr const char* kMagic = "tempervi-checkpoint 1";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_doubles(const std::string& text, std::size_t line) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw ParseError(line, "bad number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  out << kMagic << '\n';
  out << "mode " << c.mode << '\n';
  out << "iteration " << c.iteration << '\n';
  out << "config_hash " << std::hex << c.config_hash << std::dec << '\n';
  out << "temperature " << fmt(c.temperature) << '\n';
  out << "statistic_ema " << fmt(c.statistic_ema) << ' ' << (c.statistic_ema_ready ? 1 : 0) << '\n';
  out << "posterior " << c.posterior.size();
  for (double r : c.posterior) out << ' ' << fmt(r);
  out << '\n';
  out << "lambda " << c.lambda.size();
  for (Eigen::Index i = 0; i < c.lambda.size(); ++i) out << ' ' << fmt(c.lambda[i]);
  out << '\n';
  out << "rng " << c.rng_state << '\n';
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](const std::string& key) {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, "checkpoint truncated before '" + key + "'");
    ++line_no;
    if (line.rfind(key + " ", 0) != 0) throw ParseError(line_no, "expected '" + key + "'");
    return line.substr(key.size() + 1);
  };
  if (!std::getline(in, line) || line != kMagic) throw ParseError(1, "not a tempervi checkpoint");
  ++line_no;
  Checkpoint c;
  c.mode = next("mode");
  c.iteration = std::stoull(next("iteration"));
  c.config_hash = std::stoull(next("config_hash"), nullptr, 16);
  c.temperature = parse_doubles(next("temperature"), line_no).at(0);
  {
    const auto v = parse_doubles(next("statistic_ema"), line_no);
    if (v.size() != 2) throw ParseError(line_no, "statistic_ema needs value and flag");
    c.statistic_ema = v[0];
    c.statistic_ema_ready = v[1] != 0.0;
  }
  auto counted = [&](const std::string& key) {
    auto v = parse_doubles(next(key), line_no);
    if (v.empty() || v[0] != static_cast<double>(v.size() - 1)) {
      throw ParseError(line_no, key + ": length prefix does not match the values");
    }
    v.erase(v.begin());
    return v;
  };
  c.posterior = counted("posterior");
  const auto lam = counted("lambda");
  c.lambda = Eigen::Map<const Eigen::VectorXd>(lam.data(), static_cast<Eigen::Index>(lam.size()));
  c.rng_state = next("rng");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace tempervi
