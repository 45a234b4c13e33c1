#include "safe_lsvi/instance_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "safe_lsvi/errors.hpp"

namespace safe_lsvi {

namespace {

using nlohmann::json;

template <class T>
std::size_t ix(T i) {
  return static_cast<std::size_t>(i);
}

class Writer {
 public:
  void raw(std::string_view s) { out_ += s; }
  void real(double x) { out_ += format_real(x); }
  void integer(long long v) { out_ += std::to_string(v); }
  void key(std::string_view k) {
    out_ += '"';
    out_ += k;
    out_ += "\":";
  }
  void vec(const Vec& v) {
    out_ += '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) out_ += ',';
      real(v(i));
    }
    out_ += ']';
  }
  template <class Seq, class Fn>
  void list(const Seq& seq, Fn&& fn) {
    out_ += '[';
    bool first = true;
    for (const auto& item : seq) {
      if (!first) out_ += ',';
      first = false;
      fn(item);
    }
    out_ += ']';
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("instance JSON: " + msg); }

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) bad(std::string("missing field '") + name + "'");
  return j.at(name);
}

double as_real(const json& j) {
  if (!j.is_number()) bad("expected a number");
  return j.get<double>();
}

int as_int(const json& j) {
  if (!j.is_number_integer()) bad("expected an integer");
  return j.get<int>();
}

Vec as_vec(const json& j, int d) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) bad("expected a vector of length " + std::to_string(d));
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = as_real(j[ix(i)]);
  return v;
}

const json& as_array(const json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) bad(std::string(what) + " has the wrong length");
  return j;
}

}  // namespace

std::string format_real(double x) {
  if (!std::isfinite(x)) throw ContractViolation("format_real: non-finite value");
  if (x == 0.0) x = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string instance_to_json(const MdpInstance& inst) {
  Writer w;
  w.raw("{\n");
  w.key("d");
  w.integer(inst.d);
  w.raw(",\n");
  w.key("H");
  w.integer(inst.H);
  w.raw(",\n");
  w.key("states");
  w.list(inst.layer_sizes, [&](int n) { w.integer(n); });
  w.raw(",\n");
  w.key("actions");
  w.integer(inst.n_actions);
  w.raw(",\n");
  w.key("s1");
  w.integer(inst.s1);
  w.raw(",\n");
  w.key("c_bar");
  w.real(inst.c_bar);
  w.raw(",\n");
  w.key("sigma");
  w.real(inst.sigma);
  w.raw(",\n");
  w.key("mu_star");
  w.list(inst.mu_star, [&](const Vec& v) { w.vec(v); });
  w.raw(",\n");
  w.key("gamma_star");
  w.list(inst.gamma_star, [&](const Vec& v) { w.vec(v); });
  w.raw(",\n");
  w.key("reward");
  w.list(inst.pairs, [&](const auto& layer) {
    w.list(layer, [&](const auto& row) { w.list(row, [&](const PairData& p) { w.real(p.reward); }); });
  });
  w.raw(",\n");
  w.key("support");
  w.list(inst.pairs, [&](const auto& layer) {
    w.list(layer, [&](const auto& row) {
      w.list(row, [&](const PairData& p) { w.list(p.support, [&](int sn) { w.integer(sn); }); });
    });
  });
  w.raw(",\n");
  w.key("phi");
  w.raw("[\n");
  for (int h = 0; h < inst.H; ++h) {
    if (h) w.raw(",\n");
    w.list(inst.pairs[ix(h)], [&](const auto& row) {
      w.list(row, [&](const PairData& p) { w.list(p.phi, [&](const Vec& v) { w.vec(v); }); });
    });
  }
  w.raw("\n],\n");
  w.key("seed_subgraph");
  w.raw("{");
  w.key("triplets");
  w.list(inst.seed.triplets, [&](const Triplet& t) {
    w.raw("[");
    w.integer(t.h);
    w.raw(",");
    w.integer(t.s);
    w.raw(",");
    w.integer(t.a);
    w.raw(",");
    w.integer(t.s_next);
    w.raw("]");
  });
  w.raw(",");
  w.key("costs");
  w.list(inst.seed.costs, [&](double c) { w.real(c); });
  w.raw("},\n");
  w.key("bounds");
  w.raw("{");
  w.key("D");
  w.real(inst.bounds.D);
  w.raw(",");
  w.key("L");
  w.real(inst.bounds.L);
  w.raw("}\n}\n");
  return w.take();
}

MdpInstance instance_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    bad(std::string("parse error: ") + e.what());
  }

  MdpInstance inst;
  inst.d = as_int(field(j, "d"));
  inst.H = as_int(field(j, "H"));
  if (inst.d < 1 || inst.H < 1) bad("d and H must be positive");
  const auto& states = as_array(field(j, "states"), ix(inst.H + 1), "states");
  for (const auto& n : states) inst.layer_sizes.push_back(as_int(n));
  for (int n : inst.layer_sizes) {
    if (n < 1) bad("every layer needs at least one state");
  }
  inst.n_actions = as_int(field(j, "actions"));
  if (inst.n_actions < 1) bad("need at least one action");
  inst.s1 = as_int(field(j, "s1"));
  inst.c_bar = as_real(field(j, "c_bar"));
  inst.sigma = as_real(field(j, "sigma"));

  const auto& mu = as_array(field(j, "mu_star"), ix(inst.H), "mu_star");
  const auto& gamma = as_array(field(j, "gamma_star"), ix(inst.H), "gamma_star");
  for (int h = 0; h < inst.H; ++h) {
    inst.mu_star.push_back(as_vec(mu[ix(h)], inst.d));
    inst.gamma_star.push_back(as_vec(gamma[ix(h)], inst.d));
  }

  const auto& reward = as_array(field(j, "reward"), ix(inst.H), "reward");
  const auto& support = as_array(field(j, "support"), ix(inst.H), "support");
  const auto& phi = as_array(field(j, "phi"), ix(inst.H), "phi");
  inst.pairs.resize(ix(inst.H));
  for (int h = 0; h < inst.H; ++h) {
    const int n = inst.num_states(h);
    const int n_next = inst.num_states(h + 1);
    const auto& r_l = as_array(reward[ix(h)], ix(n), "reward layer");
    const auto& s_l = as_array(support[ix(h)], ix(n), "support layer");
    const auto& p_l = as_array(phi[ix(h)], ix(n), "phi layer");
    auto& layer = inst.pairs[ix(h)];
    layer.resize(ix(n));
    for (int s = 0; s < n; ++s) {
      const auto& r_row = as_array(r_l[ix(s)], ix(inst.n_actions), "reward row");
      const auto& s_row = as_array(s_l[ix(s)], ix(inst.n_actions), "support row");
      const auto& p_row = as_array(p_l[ix(s)], ix(inst.n_actions), "phi row");
      layer[ix(s)].resize(ix(inst.n_actions));
      for (int a = 0; a < inst.n_actions; ++a) {
        auto& pd = layer[ix(s)][ix(a)];
        pd.reward = as_real(r_row[ix(a)]);
        if (!s_row[ix(a)].is_array()) bad("support entry must be an array");
        for (const auto& sn : s_row[ix(a)]) pd.support.push_back(as_int(sn));
        const auto& feats = as_array(p_row[ix(a)], ix(n_next), "phi entry");
        for (int sn = 0; sn < n_next; ++sn) pd.phi.push_back(as_vec(feats[ix(sn)], inst.d));
      }
    }
  }

  const auto& seed = field(j, "seed_subgraph");
  const auto& trip = as_array(field(seed, "triplets"), ix(inst.H), "seed triplets");
  const auto& costs = as_array(field(seed, "costs"), ix(inst.H), "seed costs");
  for (int h = 0; h < inst.H; ++h) {
    const auto& t = as_array(trip[ix(h)], 4, "seed triplet");
    inst.seed.triplets.push_back(Triplet{as_int(t[0]), as_int(t[1]), as_int(t[2]), as_int(t[3])});
    inst.seed.costs.push_back(as_real(costs[ix(h)]));
  }
  const auto& bounds = field(j, "bounds");
  inst.bounds.D = as_real(field(bounds, "D"));
  inst.bounds.L = as_real(field(bounds, "L"));

  inst.validate();
  return inst;
}

void write_instance(const MdpInstance& inst, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path.string() + " for writing");
  f << instance_to_json(inst);
  if (!f) throw ConfigError("failed writing " + path.string());
}

MdpInstance read_instance(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open instance file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return instance_from_json(ss.str());
}

}  // namespace safe_lsvi
