#include "pmstrnn/checkpoint.hpp"

#include <cmath>

#include "pmstrnn/binio.hpp"
#include "pmstrnn/errors.hpp"

namespace pmstrnn {

namespace {

constexpr std::uint32_t kVersion = 1;

void write_arch(ByteWriter& w, const ArchitectureSpec& a) {
  w.u32(static_cast<std::uint32_t>(a.input_h));
  w.u32(static_cast<std::uint32_t>(a.input_w));
  w.u32(static_cast<std::uint32_t>(a.k_fo));
  w.u32(static_cast<std::uint32_t>(a.layers.size()));
  for (const LayerSpec& l : a.layers) {
    w.f64(l.tau);
    w.u32(static_cast<std::uint32_t>(l.num_fm));
    w.u32(static_cast<std::uint32_t>(l.fm_h));
    w.u32(static_cast<std::uint32_t>(l.fm_w));
    w.u32(static_cast<std::uint32_t>(l.num_cm));
    w.u32(static_cast<std::uint32_t>(l.cm_h));
    w.u32(static_cast<std::uint32_t>(l.cm_w));
    w.u32(static_cast<std::uint32_t>(l.k_ff));
    w.u32(static_cast<std::uint32_t>(l.k_cf));
    w.u32(static_cast<std::uint32_t>(l.k_if));
    w.u32(static_cast<std::uint32_t>(l.k_fc));
  }
}

ArchitectureSpec read_arch(ByteReader& r) {
  ArchitectureSpec a;
  a.input_h = static_cast<int>(r.u32());
  a.input_w = static_cast<int>(r.u32());
  a.k_fo = static_cast<int>(r.u32());
  std::uint32_t n = r.u32();
  if (n == 0 || n > 64) throw FormatError("implausible layer count in checkpoint");
  for (std::uint32_t i = 0; i < n; ++i) {
    LayerSpec l;
    l.level = static_cast<int>(i) + 1;
    l.tau = r.f64();
    l.num_fm = static_cast<int>(r.u32());
    l.fm_h = static_cast<int>(r.u32());
    l.fm_w = static_cast<int>(r.u32());
    l.num_cm = static_cast<int>(r.u32());
    l.cm_h = static_cast<int>(r.u32());
    l.cm_w = static_cast<int>(r.u32());
    l.k_ff = static_cast<int>(r.u32());
    l.k_cf = static_cast<int>(r.u32());
    l.k_if = static_cast<int>(r.u32());
    l.k_fc = static_cast<int>(r.u32());
    a.layers.push_back(l);
  }
  a.validate();
  return a;
}

void write_params(ByteWriter& w, const ArchitectureSpec&, const NetworkParams& p) {
  auto refs = tensor_refs(const_cast<NetworkParams&>(p));
  for (const auto& t : refs)
    for (double v : *t.data) w.f64(v);
  w.f64(p.b_o);
}

void read_params(ByteReader& r, NetworkParams& p) {
  auto refs = tensor_refs(p);
  for (auto& t : refs)
    for (double& v : *t.data) v = r.f64();
  p.b_o = r.f64();
}

void write_intention(ByteWriter& w, const IntentionState& s) {
  auto refs = intention_refs(const_cast<IntentionState&>(s));
  for (const auto& t : refs)
    for (double v : *t.data) w.f64(v);
}

void read_intention(ByteReader& r, IntentionState& s) {
  auto refs = intention_refs(s);
  for (auto& t : refs)
    for (double& v : *t.data) v = r.f64();
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainedModel& model) {
  if (model.labels.size() != model.intentions.size())
    throw ConfigError("model labels and intentions are out of step");
  ByteWriter p;
  p.u32(kVersion);
  write_arch(p, model.arch);
  p.u64(model.seed);
  p.u8(model.reached_stop ? 1 : 0);
  p.u32(static_cast<std::uint32_t>(model.epochs_run));
  write_params(p, model.arch, model.params);
  p.u32(static_cast<std::uint32_t>(model.labels.size()));
  for (size_t i = 0; i < model.labels.size(); ++i) {
    p.str(model.labels[i]);
    write_intention(p, model.intentions[i]);
  }
  p.u32(static_cast<std::uint32_t>(model.log.size()));
  for (const EpochLog& e : model.log) {
    p.u32(static_cast<std::uint32_t>(e.epoch));
    p.f64(e.open_mse);
    p.f64(e.closed_mse);
    // wall time is deliberately not stored: checkpoints from identical
    // config + seed must be byte-identical
    p.u32(static_cast<std::uint32_t>(e.closed_by_sequence.size()));
    for (double v : e.closed_by_sequence) p.f64(v);
  }

  ByteWriter out;
  out.raw("PMCK", 4);
  out.raw(p.bytes().data(), p.bytes().size());
  out.u32(crc32(p.bytes().data(), p.bytes().size()));
  write_file(path, out.bytes());
}

TrainedModel load_checkpoint(const std::string& path) {
  auto bytes = read_file(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "PMCK", 4) != 0)
    throw FormatError("not a checkpoint file: " + path);
  size_t payload_len = bytes.size() - 8;
  std::uint32_t want = crc32(bytes.data() + 4, payload_len);
  ByteReader tail(bytes.data() + 4 + payload_len, 4);
  if (tail.u32() != want)
    throw FormatError("checkpoint checksum mismatch: " + path);

  ByteReader r(bytes.data() + 4, payload_len);
  std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      ": " + path);
  TrainedModel m;
  m.arch = read_arch(r);
  m.seed = r.u64();
  m.reached_stop = r.u8() != 0;
  m.epochs_run = static_cast<int>(r.u32());
  m.params = zero_params(m.arch);
  read_params(r, m.params);
  std::uint32_t ns = r.u32();
  for (std::uint32_t i = 0; i < ns; ++i) {
    m.labels.push_back(r.str());
    IntentionState s = zero_intention(m.arch);
    read_intention(r, s);
    m.intentions.push_back(std::move(s));
  }
  std::uint32_t nl = r.u32();
  for (std::uint32_t i = 0; i < nl; ++i) {
    EpochLog e;
    e.epoch = static_cast<int>(r.u32());
    e.open_mse = r.f64();
    e.closed_mse = r.f64();
    e.wall_seconds = 0.0;
    std::uint32_t nb = r.u32();
    for (std::uint32_t j = 0; j < nb; ++j) e.closed_by_sequence.push_back(r.f64());
    m.log.push_back(std::move(e));
  }
  if (r.remaining() != 0)
    throw FormatError("trailing bytes in checkpoint: " + path);
  return m;
}

std::uint32_t params_checksum(const ArchitectureSpec& arch, const NetworkParams& p) {
  ByteWriter w;
  write_params(w, arch, p);
  return crc32(w.bytes().data(), w.bytes().size());
}

}  // namespace pmstrnn
