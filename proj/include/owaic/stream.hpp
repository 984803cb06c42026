#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "owaic/predictive.hpp"
#include "owaic/waic.hpp"

namespace owaic {

// h-vector streams: one header line, then one line per posterior sample.
//
//   waic-stream v1 M=<int> mode=<conditional|marginal>
//   h_1,h_2,...,h_M
//
// Marginal streams carry 4*M values per line, ordered by checkpoint fraction
// then element. Values are written in shortest round-trip form; -inf is
// spelled "-inf".

struct StreamHeader {
  std::size_t elements = 0;
  PredictiveMode mode = PredictiveMode::conditional;

  std::size_t values_per_line() const noexcept {
    return elements * PredictiveConfig{mode, 1}.fraction_count();
  }
};

class StreamWriter {
 public:
  StreamWriter(std::ostream& out, StreamHeader header);

  /// Throws IntegrityError if `h` has the wrong length.
  void write(std::span<const double> h);

  const StreamHeader& header() const noexcept { return header_; }

 private:
  std::ostream* out_;
  StreamHeader header_;
  std::string line_;
};

class StreamReader {
 public:
  /// Reads and validates the header line; throws FormatError.
  explicit StreamReader(std::istream& in);

  const StreamHeader& header() const noexcept { return header_; }

  /// Next sample into `h`; false at end of input. Throws FormatError naming
  /// the line on a malformed line or a wrong value count.
  bool next(std::vector<double>& h);

  std::size_t line_number() const noexcept { return line_no_; }

 private:
  std::istream* in_;
  StreamHeader header_;
  std::size_t line_no_ = 1;
  std::string line_;
};

/// Feeds every remaining line of `reader` into `state`; returns the number of
/// samples consumed. Throws IntegrityError if the stream's shape does not
/// match the state.
std::uint64_t feed_stream(StreamReader& reader, WaicState& state);

}  // namespace owaic
