#include <boost/crc.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "owaic/errors.hpp"
#include "owaic/waic.hpp"

namespace owaic {

namespace {

constexpr std::array<char, 8> kMagic{'O', 'W', 'A', 'I', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<std::byte>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) u8(static_cast<std::uint8_t>(p[i]));
  }
  std::vector<std::byte>& bytes() { return out_; }

 private:
  std::vector<std::byte> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw CorruptCheckpointError("checkpoint is truncated");
  }

  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32(std::span<const std::byte> bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

constexpr std::size_t kRecordBytes = 8 * 7;

}  // namespace

std::vector<std::byte> checkpoint_save(const WaicState& state) {
  Writer w;
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);
  w.u8(state.mode() == PredictiveMode::conditional ? 0 : 1);
  w.u64(state.inner_draws());
  w.u32(state.partition_digest());
  w.u64(state.elements());
  w.u64(state.fraction_count());
  w.u64(state.sample_count());
  const auto& lppd = state.lppd_states();
  const auto& pw = state.p_waic_states();
  const auto& ninf = state.neg_inf_counts();
  for (std::size_t i = 0; i < lppd.size(); ++i) {
    w.u64(lppd[i].count());
    w.f64(lppd[i].current_max());
    w.f64(lppd[i].current_sum());
    w.u64(pw[i].count());
    w.f64(pw[i].mean());
    w.f64(pw[i].m2());
    w.u64(ninf[i]);
  }
  w.u32(crc32(w.bytes()));
  return std::move(w.bytes());
}

WaicState checkpoint_load(std::span<const std::byte> bytes) {
  if (bytes.size() < kMagic.size() + 4 + 4) throw CorruptCheckpointError("checkpoint is truncated");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw CorruptCheckpointError("not a WAIC checkpoint (bad magic)");
  }
  Reader r(bytes.subspan(kMagic.size()));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CorruptCheckpointError("checkpoint format version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (tail.u32() != crc32(body)) throw CorruptCheckpointError("checkpoint CRC mismatch");

  WaicState state;
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw CorruptCheckpointError("checkpoint has an unknown mode tag");
  state.mode_ = mode == 0 ? PredictiveMode::conditional : PredictiveMode::marginal;
  state.inner_draws_ = r.u64();
  state.digest_ = r.u32();
  state.elements_ = r.u64();
  state.fractions_ = r.u64();
  state.samples_ = r.u64();
  const std::size_t expected_fractions = PredictiveConfig{state.mode_, 1}.fraction_count();
  if (state.elements_ == 0 || state.fractions_ != expected_fractions) {
    throw CorruptCheckpointError("checkpoint header is inconsistent");
  }
  const std::size_t n = state.elements_ * state.fractions_;
  if (r.remaining() < 4) throw CorruptCheckpointError("checkpoint is truncated");
  if (n > (r.remaining() - 4) / kRecordBytes || r.remaining() - 4 != n * kRecordBytes) {
    throw CorruptCheckpointError("checkpoint length does not match its header");
  }
  state.lppd_.reserve(n);
  state.p_waic_.reserve(n);
  state.neg_inf_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t lc = r.u64();
    const double mx = r.f64();
    const double sm = r.f64();
    state.lppd_.push_back(LogSumExpState::restore(lc, mx, sm));
    const std::uint64_t wc = r.u64();
    const double mean = r.f64();
    const double m2 = r.f64();
    state.p_waic_.push_back(WelfordState::restore(wc, mean, m2));
    state.neg_inf_.push_back(r.u64());
  }
  return state;
}

void save_checkpoint_file(const std::filesystem::path& path, const WaicState& state) {
  const auto bytes = checkpoint_save(state);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

WaicState load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptCheckpointError("cannot open checkpoint " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_load(std::as_bytes(std::span(raw)));
}

}  // namespace owaic
