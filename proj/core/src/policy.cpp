#include "advgrasp/policy.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace advgrasp {

namespace {

// log-std = center + scale * tanh(raw), a bounded per-head range. The caps
// matter more than the floors: the entropy bonus inflates sigma toward the
// ceiling whenever advantages are weak, so each ceiling must itself be a
// usable policy. Translation is rate-clamped as one 3D vector, so wide planar
// heads turn into target jitter that eats the step budget, starves the
// vertical climb, and averages into a hover; their caps stay tight. The
// height head keeps a wide cap on purpose: its command is object-relative
// with a z >= 0 floor, so under the rate clamp a wide height head gives a
// held object an up-biased random walk, which is the only way an untrained
// policy ever completes a lift. Head order is x, y, z, yaw.
constexpr double kRobotLsCenter[4] = {-1.85, -1.85, -1.0, -1.75};
constexpr double kRobotLsScale[4] = {0.65, 0.65, 1.0, 0.75};
constexpr double kMoverLsCenter = -1.0;
constexpr double kMoverLsScale = 1.0;
constexpr double kHeadInitScale = 0.003;
// Behavioral priors baked into the robot head biases. Untrained exploration
// must produce occasional complete lifts or the success reward never enters
// the returns; three structural facts make that impossible for a neutral
// init. First, the height command is object-relative and a held object rides
// the gripper, so any stationary policy settles at its own commanded depth
// and holds have zero climb drift. Second, the +0.1 m lift needs the fingers
// closed for ~7 consecutive steps, which a fair per-step coin almost never
// delivers. Third, from the mid-range height default the box top is ~5 sigma
// away and the gripper never dips inside at all. The cures, in order: a wide
// height sigma (see above), a close-biased finger head, and a height mean
// starting at the top face.
constexpr double kRobotZBiasInit = -1.1;
constexpr double kRobotZLogStdBiasInit = 1.2;
constexpr double kRobotCloseBiasInit = 1.73;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
// log(1 - tanh(u)^2), stable for large |u|
double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

double squash(double u, HeadBounds b) {
  return b.lo + (b.hi - b.lo) * 0.5 * (std::tanh(u) + 1.0);
}

// Flat-block offsets. Order is part of the checkpoint format; never reorder.
struct Layout {
  int obs, f1, f2, H, G;
  bool grip;
  std::size_t w1, b1, w2, b2, wx, wh, bl, wm, bm, ws, bs, wg, bg, wv, bv;
  std::size_t total;
};

Layout make_layout(const PolicyDescriptor& d) {
  Layout L{};
  L.obs = d.obs_dim;
  L.f1 = d.fc1;
  L.f2 = d.fc2;
  L.H = d.rnn;
  L.G = d.gaussian_heads();
  L.grip = d.has_gripper_head();
  std::size_t off = 0;
  auto block = [&off](std::size_t n) {
    std::size_t at = off;
    off += n;
    return at;
  };
  L.w1 = block(std::size_t(L.f1) * L.obs);
  L.b1 = block(L.f1);
  L.w2 = block(std::size_t(L.f2) * L.f1);
  L.b2 = block(L.f2);
  L.wx = block(std::size_t(4 * L.H) * L.f2);
  L.wh = block(std::size_t(4 * L.H) * L.H);
  L.bl = block(4 * L.H);
  L.wm = block(std::size_t(L.G) * L.H);
  L.bm = block(L.G);
  L.ws = block(std::size_t(L.G) * L.H);
  L.bs = block(L.G);
  if (L.grip) {
    L.wg = block(L.H);
    L.bg = block(1);
  }
  L.wv = block(L.H);
  L.bv = block(1);
  L.total = off;
  return L;
}

// y = W x + b, W row-major rows x cols
void matvec(const double* W, const double* b, const double* x, int rows,
            int cols, double* y) {
  for (int r = 0; r < rows; ++r) {
    double acc = b ? b[r] : 0.0;
    const double* row = W + std::size_t(r) * cols;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// dW += dy x^T ; db += dy ; dx += W^T dy
void matvec_back(const double* W, const double* x, const double* dy, int rows,
                 int cols, double* dW, double* db, double* dx) {
  for (int r = 0; r < rows; ++r) {
    double g = dy[r];
    if (db) db[r] += g;
    const double* row = W + std::size_t(r) * cols;
    double* drow = dW + std::size_t(r) * cols;
    for (int c = 0; c < cols; ++c) {
      drow[c] += g * x[c];
      if (dx) dx[c] += row[c] * g;
    }
  }
}

struct StepCache {
  std::vector<double> x1, x2;          // fc activations (post-tanh)
  std::vector<double> gi, gf, gg, go;  // gate activations
  std::vector<double> c, tc, h;        // cell, tanh(cell), output
  std::vector<double> mu, ls_raw, tr;  // means, raw log-std, tanh(raw)
  double logit = 0.0, p = 0.0, V = 0.0;
};

void forward_one(const PolicyParams& pp, const Layout& L, const double* obs,
                 const double* h_prev, const double* c_prev, StepCache& s) {
  const double* w = pp.w.data();
  s.x1.resize(L.f1);
  matvec(w + L.w1, w + L.b1, obs, L.f1, L.obs, s.x1.data());
  for (auto& v : s.x1) v = std::tanh(v);
  s.x2.resize(L.f2);
  matvec(w + L.w2, w + L.b2, s.x1.data(), L.f2, L.f1, s.x2.data());
  for (auto& v : s.x2) v = std::tanh(v);

  std::vector<double> z(4 * L.H);
  matvec(w + L.wx, w + L.bl, s.x2.data(), 4 * L.H, L.f2, z.data());
  std::vector<double> zh(4 * L.H);
  matvec(w + L.wh, nullptr, h_prev, 4 * L.H, L.H, zh.data());
  for (int i = 0; i < 4 * L.H; ++i) z[i] += zh[i];

  s.gi.resize(L.H);
  s.gf.resize(L.H);
  s.gg.resize(L.H);
  s.go.resize(L.H);
  s.c.resize(L.H);
  s.tc.resize(L.H);
  s.h.resize(L.H);
  for (int i = 0; i < L.H; ++i) {
    s.gi[i] = sigmoid(z[i]);
    s.gf[i] = sigmoid(z[L.H + i]);
    s.gg[i] = std::tanh(z[2 * L.H + i]);
    s.go[i] = sigmoid(z[3 * L.H + i]);
    s.c[i] = s.gf[i] * c_prev[i] + s.gi[i] * s.gg[i];
    s.tc[i] = std::tanh(s.c[i]);
    s.h[i] = s.go[i] * s.tc[i];
  }

  s.mu.resize(L.G);
  matvec(w + L.wm, w + L.bm, s.h.data(), L.G, L.H, s.mu.data());
  s.ls_raw.resize(L.G);
  matvec(w + L.ws, w + L.bs, s.h.data(), L.G, L.H, s.ls_raw.data());
  s.tr.resize(L.G);
  for (int k = 0; k < L.G; ++k) s.tr[k] = std::tanh(s.ls_raw[k]);

  if (L.grip) {
    double zg;
    matvec(w + L.wg, w + L.bg, s.h.data(), 1, L.H, &zg);
    s.logit = zg;
    s.p = sigmoid(zg);
  }
  double zv;
  matvec(w + L.wv, w + L.bv, s.h.data(), 1, L.H, &zv);
  s.V = zv;
}

double log_std_scale(AgentRole role, int k) {
  return role == AgentRole::robot ? kRobotLsScale[k] : kMoverLsScale;
}

double transformed_log_std(AgentRole role, int k, double tr) {
  double c = role == AgentRole::robot ? kRobotLsCenter[k] : kMoverLsCenter;
  return c + log_std_scale(role, k) * tr;
}

}  // namespace

const char* to_string(AgentRole r) {
  return r == AgentRole::robot ? "robot" : "mover";
}

std::vector<HeadBounds> PolicyDescriptor::bounds() const {
  if (role == AgentRole::robot) {
    return {{-kRobotActionXYMax, kRobotActionXYMax},
            {-kRobotActionXYMax, kRobotActionXYMax},
            {0.0, kRobotActionZMax},
            {-kRobotActionYawMax, kRobotActionYawMax}};
  }
  return {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
}

std::size_t PolicyDescriptor::param_count() const {
  return make_layout(*this).total;
}

HiddenState HiddenState::zero(const PolicyDescriptor& d) {
  HiddenState hs;
  hs.h.assign(d.rnn, 0.0);
  hs.c.assign(d.rnn, 0.0);
  return hs;
}

PolicyParams init_policy(const PolicyDescriptor& d, std::uint64_t seed) {
  if (d.obs_dim <= 0 || d.fc1 <= 0 || d.fc2 <= 0 || d.rnn <= 0)
    throw std::invalid_argument("policy descriptor: sizes must be positive");
  Layout L = make_layout(d);
  PolicyParams pp;
  pp.desc = d;
  pp.w.assign(L.total, 0.0);
  Rng rng(seed);
  auto fill = [&](std::size_t at, std::size_t n, double scale) {
    for (std::size_t i = 0; i < n; ++i)
      pp.w[at + i] = rng.uniform(-scale, scale);
  };
  fill(L.w1, std::size_t(L.f1) * L.obs, 1.0 / std::sqrt(double(L.obs)));
  fill(L.w2, std::size_t(L.f2) * L.f1, 1.0 / std::sqrt(double(L.f1)));
  fill(L.wx, std::size_t(4 * L.H) * L.f2, 1.0 / std::sqrt(double(L.f2)));
  fill(L.wh, std::size_t(4 * L.H) * L.H, 1.0 / std::sqrt(double(L.H)));
  for (int i = 0; i < L.H; ++i) pp.w[L.bl + L.H + i] = 1.0;  // forget-gate bias
  double hs = kHeadInitScale / std::sqrt(double(L.H));
  fill(L.wm, std::size_t(L.G) * L.H, hs);
  fill(L.ws, std::size_t(L.G) * L.H, hs);
  if (L.grip) fill(L.wg, L.H, hs);
  fill(L.wv, L.H, hs);
  if (d.role == AgentRole::robot) {
    pp.w[L.bm + 2] = kRobotZBiasInit;
    pp.w[L.bs + 2] = kRobotZLogStdBiasInit;
    pp.w[L.bg] = kRobotCloseBiasInit;
  }
  return pp;
}

PolicyOutput policy_step(const PolicyParams& p, const double* obs, int obs_len,
                         const HiddenState& h) {
  Layout L = make_layout(p.desc);
  if (obs_len != L.obs) throw std::invalid_argument("policy_step: obs length");
  if (int(h.h.size()) != L.H || int(h.c.size()) != L.H)
    throw std::invalid_argument("policy_step: hidden size");
  if (p.w.size() != L.total)
    throw std::invalid_argument("policy_step: parameter block size");

  StepCache s;
  forward_one(p, L, obs, h.h.data(), h.c.data(), s);

  PolicyOutput out;
  out.dist.mean = s.mu;
  out.dist.log_std.resize(L.G);
  for (int k = 0; k < L.G; ++k)
    out.dist.log_std[k] = transformed_log_std(p.desc.role, k, s.tr[k]);
  out.dist.bounds = p.desc.bounds();
  out.dist.has_gripper = L.grip;
  out.dist.close_logit = s.logit;
  out.value = s.V;
  out.hidden.h = std::move(s.h);
  out.hidden.c = std::move(s.c);
  return out;
}

PolicyOutput policy_step(const PolicyParams& p, const ObsVector& obs,
                         const HiddenState& h) {
  return policy_step(p, obs.data(), int(obs.size()), h);
}

ActionSample sample_action(const ActionDistribution& d, Rng& rng) {
  ActionSample s;
  std::size_t n = d.mean.size();
  s.presquash.resize(n);
  s.action.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    double sigma = std::exp(d.log_std[k]);
    s.presquash[k] = rng.normal(d.mean[k], sigma);
    s.action[k] = squash(s.presquash[k], d.bounds[k]);
  }
  if (d.has_gripper) s.close = rng.bernoulli(sigmoid(d.close_logit));
  s.log_prob = action_log_prob(d, s.presquash, s.close);
  return s;
}

double action_log_prob(const ActionDistribution& d,
                       const std::vector<double>& presquash, bool close) {
  double lp = 0.0;
  for (std::size_t k = 0; k < d.mean.size(); ++k) {
    double ls = d.log_std[k];
    double z = (presquash[k] - d.mean[k]) * std::exp(-ls);
    lp += -0.5 * z * z - ls - 0.5 * std::log(2.0 * std::numbers::pi);
    // density transforms through a = lo + (hi-lo)(tanh u + 1)/2
    lp -= std::log((d.bounds[k].hi - d.bounds[k].lo) * 0.5);
    lp -= log_one_minus_tanh_sq(presquash[k]);
  }
  if (d.has_gripper)
    lp -= softplus(close ? -d.close_logit : d.close_logit);
  return lp;
}

double entropy(const ActionDistribution& d) {
  double h = 0.0;
  for (double ls : d.log_std)
    h += 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) + ls;
  if (d.has_gripper) {
    double p = sigmoid(d.close_logit);
    double q = 1.0 - p;
    h += p * softplus(-d.close_logit) + q * softplus(d.close_logit);
  }
  return h;
}

RobotAction to_robot_action(const ActionSample& s) {
  RobotAction a;
  a.x = s.action[0];
  a.y = s.action[1];
  a.z = s.action[2];
  a.yaw = s.action[3];
  a.gripper = s.close ? GripperCmd::close : GripperCmd::open;
  return a;
}

MoverAction to_mover_action(const ActionSample& s) {
  MoverAction a;
  a.x = s.action[0];
  a.y = s.action[1];
  a.yaw_rate = s.action[2];
  return a;
}

GradientResult gradients(const PolicyParams& pp, const LossSpec& ls,
                         const SegmentBatch& batch) {
  Layout L = make_layout(pp.desc);
  if (pp.w.size() != L.total)
    throw std::invalid_argument("gradients: parameter block size");
  const int T = int(batch.steps.size());
  if (T == 0) throw std::invalid_argument("gradients: empty segment");
  if (int(batch.h0.h.size()) != L.H || int(batch.h0.c.size()) != L.H)
    throw std::invalid_argument("gradients: hidden size");

  std::vector<StepCache> cache(T);
  const double* h_prev = batch.h0.h.data();
  const double* c_prev = batch.h0.c.data();
  for (int t = 0; t < T; ++t) {
    const auto& st = batch.steps[t];
    if (int(st.obs.size()) != L.obs)
      throw std::invalid_argument("gradients: obs length");
    if (int(st.presquash.size()) != L.G)
      throw std::invalid_argument("gradients: action length");
    forward_one(pp, L, st.obs.data(), h_prev, c_prev, cache[t]);
    h_prev = cache[t].h.data();
    c_prev = cache[t].c.data();
  }

  GradientResult out;
  out.grad.assign(L.total, 0.0);
  double* g = out.grad.data();
  const double* w = pp.w.data();
  auto bounds = pp.desc.bounds();

  std::vector<double> dh_carry(L.H, 0.0), dc_carry(L.H, 0.0);
  std::vector<double> dh(L.H), dz(4 * L.H), dx2(L.f2), dx1(L.f1);

  for (int t = T - 1; t >= 0; --t) {
    const auto& st = batch.steps[t];
    const auto& s = cache[t];
    const double A = st.advantage;

    // loss bookkeeping (forward values)
    ActionDistribution dist;
    dist.mean = s.mu;
    dist.log_std.resize(L.G);
    for (int k = 0; k < L.G; ++k)
      dist.log_std[k] = transformed_log_std(pp.desc.role, k, s.tr[k]);
    dist.bounds = bounds;
    dist.has_gripper = L.grip;
    dist.close_logit = s.logit;
    out.policy_loss += -A * action_log_prob(dist, st.presquash, st.close);
    double verr = s.V - st.ret;
    out.value_loss += verr * verr;
    out.entropy_sum += entropy(dist);

    // head gradients
    std::fill(dh.begin(), dh.end(), 0.0);
    for (int i = 0; i < L.H; ++i) dh[i] = dh_carry[i];

    std::vector<double> dmu(L.G), dls_raw(L.G);
    for (int k = 0; k < L.G; ++k) {
      double lsv = transformed_log_std(pp.desc.role, k, s.tr[k]);
      double inv_sigma = std::exp(-lsv);
      double z = (st.presquash[k] - s.mu[k]) * inv_sigma;
      dmu[k] = -A * z * inv_sigma;
      double dls = -A * (z * z - 1.0) - ls.entropy_coeff;
      dls_raw[k] =
          dls * log_std_scale(pp.desc.role, k) * (1.0 - s.tr[k] * s.tr[k]);
    }
    matvec_back(w + L.wm, s.h.data(), dmu.data(), L.G, L.H, g + L.wm, g + L.bm,
                dh.data());
    matvec_back(w + L.ws, s.h.data(), dls_raw.data(), L.G, L.H, g + L.ws,
                g + L.bs, dh.data());
    if (L.grip) {
      double dlogit = -A * ((st.close ? 1.0 : 0.0) - s.p) +
                      ls.entropy_coeff * s.logit * s.p * (1.0 - s.p);
      matvec_back(w + L.wg, s.h.data(), &dlogit, 1, L.H, g + L.wg, g + L.bg,
                  dh.data());
    }
    double dV = 2.0 * ls.value_coeff * verr;
    matvec_back(w + L.wv, s.h.data(), &dV, 1, L.H, g + L.wv, g + L.bv, dh.data());

    // lstm backward
    const double* cp = t > 0 ? cache[t - 1].c.data() : batch.h0.c.data();
    const double* hp = t > 0 ? cache[t - 1].h.data() : batch.h0.h.data();
    for (int i = 0; i < L.H; ++i) {
      double d_o = dh[i] * s.tc[i];
      double dc = dh[i] * s.go[i] * (1.0 - s.tc[i] * s.tc[i]) + dc_carry[i];
      double d_i = dc * s.gg[i];
      double d_g = dc * s.gi[i];
      double d_f = dc * cp[i];
      dc_carry[i] = dc * s.gf[i];
      dz[i] = d_i * s.gi[i] * (1.0 - s.gi[i]);
      dz[L.H + i] = d_f * s.gf[i] * (1.0 - s.gf[i]);
      dz[2 * L.H + i] = d_g * (1.0 - s.gg[i] * s.gg[i]);
      dz[3 * L.H + i] = d_o * s.go[i] * (1.0 - s.go[i]);
    }
    std::fill(dx2.begin(), dx2.end(), 0.0);
    matvec_back(w + L.wx, s.x2.data(), dz.data(), 4 * L.H, L.f2, g + L.wx,
                g + L.bl, dx2.data());
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    matvec_back(w + L.wh, hp, dz.data(), 4 * L.H, L.H, g + L.wh, nullptr,
                dh_carry.data());

    // fc backward
    for (int i = 0; i < L.f2; ++i) dx2[i] *= 1.0 - s.x2[i] * s.x2[i];
    std::fill(dx1.begin(), dx1.end(), 0.0);
    matvec_back(w + L.w2, s.x1.data(), dx2.data(), L.f2, L.f1, g + L.w2,
                g + L.b2, dx1.data());
    for (int i = 0; i < L.f1; ++i) dx1[i] *= 1.0 - s.x1[i] * s.x1[i];
    matvec_back(w + L.w1, st.obs.data(), dx1.data(), L.f1, L.obs, g + L.w1,
                g + L.b1, nullptr);
  }

  out.loss = out.policy_loss + ls.value_coeff * out.value_loss -
             ls.entropy_coeff * out.entropy_sum;
  return out;
}

// --- checkpoint io ---------------------------------------------------------

void quantize_to_f32(PolicyParams& p) {
  for (double& v : p.w) v = double(float(v));
}

void save_checkpoint(const std::string& path, const PolicyParams& p,
                     const CheckpointMeta& meta) {
  Layout L = make_layout(p.desc);
  if (p.w.size() != L.total)
    throw std::invalid_argument("save_checkpoint: parameter block size");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  char head[256];
  std::snprintf(head, sizeof(head),
                "advgrasp checkpoint 1\nrole=%s\nobs_dim=%d\nfc1=%d\nfc2=%d\n"
                "rnn=%d\ntraining_step=%lld\ngamma1=%.17g\nparams=%zu\n---\n",
                to_string(p.desc.role), p.desc.obs_dim, p.desc.fc1, p.desc.fc2,
                p.desc.rnn, static_cast<long long>(meta.training_step),
                meta.gamma1, p.w.size());
  f << head;
  for (double v : p.w) {
    float fv = float(v);
    std::uint32_t bits;
    std::memcpy(&bits, &fv, 4);
    unsigned char le[4] = {static_cast<unsigned char>(bits & 0xff),
                           static_cast<unsigned char>((bits >> 8) & 0xff),
                           static_cast<unsigned char>((bits >> 16) & 0xff),
                           static_cast<unsigned char>((bits >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(le), 4);
  }
  if (!f) throw std::runtime_error("short write on checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read checkpoint '" + path + "'");
  auto bad = [&path](const std::string& why) {
    return std::runtime_error("checkpoint '" + path + "': " + why);
  };
  std::string line;
  if (!std::getline(f, line) || line != "advgrasp checkpoint 1")
    throw bad("unrecognized header");

  Checkpoint ck;
  std::size_t declared = 0;
  while (std::getline(f, line)) {
    if (line == "---") break;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw bad("malformed header line '" + line + "'");
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "role") {
      if (val == "robot") ck.params.desc.role = AgentRole::robot;
      else if (val == "mover") ck.params.desc.role = AgentRole::mover;
      else throw bad("unknown role '" + val + "'");
    } else if (key == "obs_dim") ck.params.desc.obs_dim = std::stoi(val);
    else if (key == "fc1") ck.params.desc.fc1 = std::stoi(val);
    else if (key == "fc2") ck.params.desc.fc2 = std::stoi(val);
    else if (key == "rnn") ck.params.desc.rnn = std::stoi(val);
    else if (key == "training_step") ck.meta.training_step = std::stoll(val);
    else if (key == "gamma1") ck.meta.gamma1 = std::stod(val);
    else if (key == "params") declared = std::stoull(val);
    else throw bad("unknown header key '" + key + "'");
  }
  std::size_t expect = ck.params.desc.param_count();
  if (declared != expect) throw bad("parameter count mismatch");
  ck.params.w.resize(expect);
  for (std::size_t i = 0; i < expect; ++i) {
    unsigned char le[4];
    f.read(reinterpret_cast<char*>(le), 4);
    if (!f) throw bad("truncated parameter block");
    std::uint32_t bits = std::uint32_t(le[0]) | (std::uint32_t(le[1]) << 8) |
                         (std::uint32_t(le[2]) << 16) |
                         (std::uint32_t(le[3]) << 24);
    float fv;
    std::memcpy(&fv, &bits, 4);
    ck.params.w[i] = double(fv);
  }
  return ck;
}

}  // namespace advgrasp
