#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elue/ndiff/parameters.hpp"

namespace elue::ndiff {

/// Little-endian IEEE-754 binary64 encoding, independent of host byte order.
void append_f64_le(std::string& out, std::span<const double> values);
std::vector<double> read_f64_le(std::string_view bytes, std::uint64_t offset, std::uint64_t count);

/// Descriptor of one parameter entry inside a segment payload. The payload at
/// `offset` holds 3 * product(shape) doubles: value, Adam first moment, Adam
/// second moment.
struct SegmentRecord {
  std::string name;
  Shape shape;
  std::uint64_t offset = 0;
  std::uint64_t step = 0;
};

struct ParameterSegment {
  std::vector<SegmentRecord> records;
  std::string payload;
};

ParameterSegment encode_parameters(const ParameterSet& params);
ParameterSet decode_parameters(std::span<const SegmentRecord> records, std::string_view payload);

/// "name shape offset step" with shape written as "4x2".
std::string format_record(const SegmentRecord& r);
SegmentRecord parse_record(std::string_view line);
Shape parse_shape(std::string_view text);

}  // namespace elue::ndiff
