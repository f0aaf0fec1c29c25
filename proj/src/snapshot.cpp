#include "stochfsi/snapshot.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace stochfsi {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'F', 'S', 'I', 'S', 'N', 'P'};

class Writer {
public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(int v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  void matrix(const Eigen::Matrix<double, Eigen::Dynamic, 2>& m) {
    for (int i = 0; i < m.rows(); ++i)
      for (int c = 0; c < 2; ++c) f64(m(i, c));
  }
  std::string take() { return std::move(out_); }

private:
  std::string out_;
};

class Reader {
public:
  explicit Reader(const std::string& s) : s_(s) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(s_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  int i32() { return static_cast<int>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  void matrix(Eigen::Matrix<double, Eigen::Dynamic, 2>& m, int rows) {
    need(static_cast<std::size_t>(rows) * 16);
    m.resize(rows, 2);
    for (int i = 0; i < rows; ++i)
      for (int c = 0; c < 2; ++c) m(i, c) = f64();
  }
  bool done() const { return pos_ == s_.size(); }
  void need(std::size_t n) const {
    if (pos_ + n > s_.size()) throw SnapshotError("snapshot truncated");
  }

private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

// Ledger layout: doubles then ints, in this order.
constexpr int kLedgerDoubles = 17;

void put_row(Writer& w, const LedgerRow& r) {
  for (double v : {r.e_n, r.e_half, r.e_np1, r.d1, r.c1, r.d2_viscous, r.d2_slip, r.d2_div,
                   r.d2_normal, r.c2, r.pressure_work, r.stochastic_work, r.stochastic_new,
                   r.noise_quadratic, r.forcing_dual, r.v_jump_sq, r.picard_residual})
    w.f64(v);
  w.i32(r.picard_iterations);
  w.i32(r.substeps);
}

LedgerRow get_row(Reader& rd) {
  double d[kLedgerDoubles];
  for (double& v : d) v = rd.f64();
  LedgerRow r;
  r.e_n = d[0];
  r.e_half = d[1];
  r.e_np1 = d[2];
  r.d1 = d[3];
  r.c1 = d[4];
  r.d2_viscous = d[5];
  r.d2_slip = d[6];
  r.d2_div = d[7];
  r.d2_normal = d[8];
  r.c2 = d[9];
  r.pressure_work = d[10];
  r.stochastic_work = d[11];
  r.stochastic_new = d[12];
  r.noise_quadratic = d[13];
  r.forcing_dual = d[14];
  r.v_jump_sq = d[15];
  r.picard_residual = d[16];
  r.picard_iterations = rd.i32();
  r.substeps = rd.i32();
  return r;
}

}  // namespace

std::string encode_snapshot(const Snapshot& snap) {
  const TrajectoryRecord& t = snap.traj;
  const int steps = t.steps();
  const int nodes = t.u.empty() ? 0 : static_cast<int>(t.u.front().rows());
  const int ndof = t.v.empty() ? 0 : static_cast<int>(t.v.front().rows());
  const int modes = t.increments.empty() ? 0 : static_cast<int>(t.increments.front().size());
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kSnapshotVersion);
  w.u64(snap.config_hash);
  w.str(snap.config_text);
  w.u64(t.seed);
  w.i32(t.N);
  w.f64(t.dt);
  w.i32(nodes);
  w.i32(ndof);
  w.i32(modes);
  w.i32(steps);
  w.u8(t.failed ? 1 : 0);
  w.i32(t.stopping_step);
  w.str(t.failure);
  for (int n = 0; n <= steps; ++n) {
    w.matrix(t.u[n]);
    w.matrix(t.v[n]);
    w.matrix(t.eta[n]);
    w.matrix(t.eta_star[n]);
    w.i32(t.star_index[n]);
    w.u8(t.theta[n]);
    const GeometryBounds& b = t.bounds[n];
    w.f64(b.j_min);
    w.f64(b.j_min_vertex);
    w.f64(b.eta_norm);
    w.u8(b.injective ? 1 : 0);
  }
  for (int n = 0; n < steps; ++n) {
    w.matrix(t.v_half[n]);
    for (int k = 0; k < modes; ++k) w.f64(t.increments[n](k));
    w.f64(t.amplitudes[n]);
    put_row(w, t.ledger[n]);
  }
  return w.take();
}

Snapshot decode_snapshot(const std::string& bytes) {
  if (bytes.empty()) throw SnapshotError("empty snapshot");
  Reader r(bytes);
  r.need(sizeof kMagic);
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw SnapshotError("bad magic");
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kSnapshotVersion)
    throw SnapshotError("unsupported schema version " + std::to_string(version));
  Snapshot s;
  s.config_hash = r.u64();
  s.config_text = r.str();
  if (fnv1a64(s.config_text) != s.config_hash) throw SnapshotError("config hash mismatch");
  TrajectoryRecord& t = s.traj;
  t.seed = r.u64();
  t.N = r.i32();
  t.dt = r.f64();
  const int nodes = r.i32(), ndof = r.i32(), modes = r.i32(), steps = r.i32();
  if (nodes < 0 || ndof < 0 || modes < 0 || steps < 0 || steps > t.N)
    throw SnapshotError("inconsistent snapshot dimensions");
  t.failed = r.u8() != 0;
  t.stopping_step = r.i32();
  t.failure = r.str();
  for (int n = 0; n <= steps; ++n) {
    NodalField u;
    BeamCoeffs v, eta, eta_star;
    r.matrix(u, nodes);
    r.matrix(v, ndof);
    r.matrix(eta, ndof);
    r.matrix(eta_star, ndof);
    t.u.push_back(std::move(u));
    t.v.push_back(std::move(v));
    t.eta.push_back(std::move(eta));
    t.eta_star.push_back(std::move(eta_star));
    t.star_index.push_back(r.i32());
    t.theta.push_back(r.u8());
    GeometryBounds b;
    b.j_min = r.f64();
    b.j_min_vertex = r.f64();
    b.eta_norm = r.f64();
    b.injective = r.u8() != 0;
    t.bounds.push_back(b);
  }
  for (int n = 0; n < steps; ++n) {
    BeamCoeffs vh;
    r.matrix(vh, ndof);
    t.v_half.push_back(std::move(vh));
    Eigen::VectorXd dw(modes);
    for (int k = 0; k < modes; ++k) dw(k) = r.f64();
    t.increments.push_back(std::move(dw));
    t.amplitudes.push_back(r.f64());
    t.ledger.push_back(get_row(r));
  }
  if (!r.done()) throw SnapshotError("trailing bytes after snapshot payload");
  return s;
}

void write_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SnapshotError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_snapshot(const std::string& path, const Snapshot& snap) {
  write_atomic(path, encode_snapshot(snap));
}

Snapshot read_snapshot(const std::string& path) { return decode_snapshot(read_file(path)); }

}  // namespace stochfsi
