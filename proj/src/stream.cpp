#include "owaic/stream.hpp"

#include <istream>
#include <ostream>

#include "owaic/errors.hpp"
#include "text_util.hpp"

namespace owaic {

StreamWriter::StreamWriter(std::ostream& out, StreamHeader header) : out_(&out), header_(header) {
  *out_ << "waic-stream v1 M=" << header_.elements << " mode=" << to_string(header_.mode) << '\n';
}

void StreamWriter::write(std::span<const double> h) {
  if (h.size() != header_.values_per_line()) {
    throw IntegrityError("stream line needs " + std::to_string(header_.values_per_line()) +
                         " values, got " + std::to_string(h.size()));
  }
  line_.clear();
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i) line_ += ',';
    line_ += detail::format_double(h[i]);
  }
  line_ += '\n';
  *out_ << line_;
}

StreamReader::StreamReader(std::istream& in) : in_(&in) {
  std::string line;
  if (!std::getline(*in_, line)) throw FormatError("stream is empty", 1);
  const auto header = detail::parse_header(line, 1);
  if (header.magic != "waic-stream") throw FormatError("missing waic-stream header", 1);
  if (header.version != "v1") throw FormatError("unsupported stream version " + header.version, 1);
  const auto m = detail::parse_integer(header.at("M", 1));
  if (!m || *m < 1) throw FormatError("header M must be a positive integer", 1);
  header_.elements = static_cast<std::size_t>(*m);
  const std::string& mode = header.at("mode", 1);
  if (mode == "conditional") {
    header_.mode = PredictiveMode::conditional;
  } else if (mode == "marginal") {
    header_.mode = PredictiveMode::marginal;
  } else {
    throw FormatError("unknown stream mode '" + mode + "'", 1);
  }
}

bool StreamReader::next(std::vector<double>& h) {
  while (std::getline(*in_, line_)) {
    ++line_no_;
    if (detail::trim(line_).empty()) continue;
    h.clear();
    for (auto tok : detail::split(line_, ',')) {
      auto v = detail::parse_double(tok);
      if (!v) throw FormatError("cannot parse value '" + std::string(tok) + "'", line_no_);
      h.push_back(*v);
    }
    if (h.size() != header_.values_per_line()) {
      throw FormatError("expected " + std::to_string(header_.values_per_line()) +
                            " values, found " + std::to_string(h.size()),
                        line_no_);
    }
    return true;
  }
  return false;
}

std::uint64_t feed_stream(StreamReader& reader, WaicState& state) {
  if (reader.header().elements != state.elements() || reader.header().mode != state.mode()) {
    throw IntegrityError("stream has M=" + std::to_string(reader.header().elements) + " mode=" +
                         to_string(reader.header().mode) + " but the state has M=" +
                         std::to_string(state.elements()) + " mode=" + to_string(state.mode()));
  }
  std::vector<double> h;
  std::uint64_t n = 0;
  while (reader.next(h)) {
    try {
      state.update(h);
    } catch (const NumericalError& e) {
      throw NumericalError("line " + std::to_string(reader.line_number()) + ": " + e.what());
    }
    ++n;
  }
  return n;
}

}  // namespace owaic
