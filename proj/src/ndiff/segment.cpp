#include "elue/ndiff/segment.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <sstream>

#include "elue/error.hpp"

namespace elue::ndiff {

void append_f64_le(std::string& out, std::span<const double> values) {
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    out.append(buf, 8);
  }
}

std::vector<double> read_f64_le(std::string_view bytes, std::uint64_t offset, std::uint64_t count) {
  if (offset > bytes.size() || count > (bytes.size() - offset) / 8) {
    throw FormatError("segment: read of " + std::to_string(count) + " doubles at byte " +
                      std::to_string(offset) + " exceeds payload of " + std::to_string(bytes.size()));
  }
  std::vector<double> out(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + 8 * k + i])) << (8 * i);
    }
    out[k] = std::bit_cast<double>(bits);
  }
  return out;
}

ParameterSegment encode_parameters(const ParameterSet& params) {
  ParameterSegment seg;
  for (const auto& e : params.entries()) {
    seg.records.push_back({e.name, e.value.shape(), seg.payload.size(), e.adam.step});
    append_f64_le(seg.payload, e.value.values());
    append_f64_le(seg.payload, e.adam.first_moment.values());
    append_f64_le(seg.payload, e.adam.second_moment.values());
  }
  return seg;
}

ParameterSet decode_parameters(std::span<const SegmentRecord> records, std::string_view payload) {
  ParameterSet params;
  for (const auto& r : records) {
    Tensor probe(r.shape);
    const auto n = probe.size();
    auto all = read_f64_le(payload, r.offset, 3 * n);
    Tensor value(r.shape, std::vector<double>(all.begin(), all.begin() + n));
    params.add(r.name, std::move(value));
    auto& st = params.entry(r.name).adam;
    st.first_moment = Tensor(r.shape, std::vector<double>(all.begin() + n, all.begin() + 2 * n));
    st.second_moment = Tensor(r.shape, std::vector<double>(all.begin() + 2 * n, all.end()));
    st.step = r.step;
  }
  return params;
}

std::string format_record(const SegmentRecord& r) {
  return r.name + " " + shape_string(r.shape) + " " + std::to_string(r.offset) + " " + std::to_string(r.step);
}

Shape parse_shape(std::string_view text) {
  Shape shape;
  if (text == "()") return shape;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('x', start);
    if (end == std::string_view::npos) end = text.size();
    std::size_t dim = 0;
    auto part = text.substr(start, end - start);
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), dim);
    if (ec != std::errc() || p != part.data() + part.size() || dim == 0) {
      throw FormatError("segment: bad shape '" + std::string(text) + "'");
    }
    shape.push_back(dim);
    start = end + 1;
  }
  return shape;
}

SegmentRecord parse_record(std::string_view line) {
  std::istringstream in{std::string(line)};
  SegmentRecord r;
  std::string shape;
  if (!(in >> r.name >> shape >> r.offset >> r.step)) {
    throw FormatError("segment: malformed record '" + std::string(line) + "'");
  }
  r.shape = parse_shape(shape);
  return r;
}

}  // namespace elue::ndiff
