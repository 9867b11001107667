// NIfTI-1 single-file reader/writer and the raw test format.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "rcaqc/volgrid.hpp"

namespace rcaqc {
namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

enum NiftiType : std::int16_t {
  kUInt8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
};

// Field offsets inside the 348-byte header.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffDescrip = 148;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffQoffset = 268;
constexpr std::size_t kOffSrow = 280;
constexpr std::size_t kOffMagic = 344;

template <typename T>
T byteswap_value(T v) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

class HeaderView {
 public:
  HeaderView(const std::vector<unsigned char>& buf, bool swap) : buf_(buf), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    T v;
    std::memcpy(&v, buf_.data() + offset, sizeof(T));
    return swap_ ? byteswap_value(v) : v;
  }

 private:
  const std::vector<unsigned char>& buf_;
  bool swap_;
};

template <typename T>
void put(std::vector<unsigned char>& buf, std::size_t offset, T v) {
  static_assert(std::endian::native == std::endian::little, "writer assumes little-endian host");
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

struct Decoded {
  Grid grid;
  std::vector<double> values;
};

Decoded decode_nifti(const std::filesystem::path& path) {
  const auto buf = read_file(path);
  if (buf.size() < static_cast<std::size_t>(kHeaderSize))
    throw Error(ErrorCode::CorruptHeader, "file shorter than NIfTI header: " + path.string());

  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, buf.data() + kOffSizeofHdr, 4);
  bool swap = false;
  if (sizeof_hdr != kHeaderSize) {
    if (byteswap_value(sizeof_hdr) != kHeaderSize)
      throw Error(ErrorCode::UnsupportedFormat, "not a NIfTI-1 header: " + path.string());
    swap = true;
  }
  if (std::memcmp(buf.data() + kOffMagic, "n+1\0", 4) != 0)
    throw Error(ErrorCode::UnsupportedFormat, "only single-file NIfTI-1 (n+1) is supported");

  const HeaderView h(buf, swap);
  const auto ndim = h.get<std::int16_t>(kOffDim);
  if (ndim != 3) throw Error(ErrorCode::UnsupportedFormat, "dim[0] must be 3, got " + std::to_string(ndim));

  Decoded out;
  for (int a = 0; a < 3; ++a) {
    out.grid.dims[a] = h.get<std::int16_t>(kOffDim + 2 * (a + 1));
    out.grid.spacing[a] = h.get<float>(kOffPixdim + 4 * (a + 1));
  }
  for (int a = 0; a < 3; ++a) {
    if (out.grid.dims[a] < 1) throw Error(ErrorCode::CorruptHeader, "non-positive dim");
    if (!std::isfinite(out.grid.spacing[a]) || out.grid.spacing[a] <= 0.0)
      throw Error(ErrorCode::CorruptHeader, "non-positive pixdim");
  }

  // Origin: the header stores the center of voxel 0; our origin is its corner.
  Vec3 first_center{0.0, 0.0, 0.0};
  if (h.get<std::int16_t>(kOffQformCode) > 0) {
    for (int a = 0; a < 3; ++a) first_center[a] = h.get<float>(kOffQoffset + 4 * a);
  } else if (h.get<std::int16_t>(kOffSformCode) > 0) {
    for (int a = 0; a < 3; ++a) first_center[a] = h.get<float>(kOffSrow + 16 * a + 12);
  }
  for (int a = 0; a < 3; ++a) out.grid.origin[a] = first_center[a] - 0.5 * out.grid.spacing[a];
  try {
    out.grid.validate();
  } catch (const Error&) {
    throw Error(ErrorCode::CorruptHeader, "invalid geometry in " + path.string());
  }

  const auto datatype = h.get<std::int16_t>(kOffDatatype);
  std::size_t bytes_per = 0;
  switch (datatype) {
    case kUInt8: bytes_per = 1; break;
    case kInt16: bytes_per = 2; break;
    case kInt32: bytes_per = 4; break;
    case kFloat32: bytes_per = 4; break;
    case kFloat64: bytes_per = 8; break;
    default:
      throw Error(ErrorCode::UnsupportedFormat, "unsupported datatype " + std::to_string(datatype));
  }

  const float vox_offset_f = h.get<float>(kOffVoxOffset);
  if (!std::isfinite(vox_offset_f) || vox_offset_f < kVoxOffset)
    throw Error(ErrorCode::CorruptHeader, "vox_offset must be >= 352");
  const auto vox_offset = static_cast<std::size_t>(vox_offset_f);
  const std::size_t n = out.grid.size();
  if (buf.size() < vox_offset + n * bytes_per)
    throw Error(ErrorCode::CorruptHeader, "payload truncated in " + path.string());

  float slope = h.get<float>(kOffSclSlope);
  float inter = h.get<float>(kOffSclInter);
  const bool scaled = std::isfinite(slope) && slope != 0.0f && !(slope == 1.0f && inter == 0.0f);
  if (scaled && !std::isfinite(inter)) inter = 0.0f;

  out.values.resize(n);
  const unsigned char* p = buf.data() + vox_offset;
  for (std::size_t i = 0; i < n; ++i, p += bytes_per) {
    double v = 0.0;
    switch (datatype) {
      case kUInt8: v = *p; break;
      case kInt16: {
        std::int16_t t;
        std::memcpy(&t, p, 2);
        v = swap ? byteswap_value(t) : t;
        break;
      }
      case kInt32: {
        std::int32_t t;
        std::memcpy(&t, p, 4);
        v = swap ? byteswap_value(t) : t;
        break;
      }
      case kFloat32: {
        float t;
        std::memcpy(&t, p, 4);
        v = swap ? byteswap_value(t) : t;
        break;
      }
      case kFloat64: {
        double t;
        std::memcpy(&t, p, 8);
        v = swap ? byteswap_value(t) : t;
        break;
      }
    }
    out.values[i] = scaled ? v * slope + inter : v;
  }
  return out;
}

std::vector<unsigned char> encode_header(const Grid& g, std::int16_t datatype, std::int16_t bitpix) {
  std::vector<unsigned char> buf(kVoxOffset, 0);
  put<std::int32_t>(buf, kOffSizeofHdr, kHeaderSize);
  put<std::int16_t>(buf, kOffDim, 3);
  for (int a = 0; a < 3; ++a) put<std::int16_t>(buf, kOffDim + 2 * (a + 1), static_cast<std::int16_t>(g.dims[a]));
  for (int a = 4; a < 8; ++a) put<std::int16_t>(buf, kOffDim + 2 * a, 1);
  put<std::int16_t>(buf, kOffDatatype, datatype);
  put<std::int16_t>(buf, kOffBitpix, bitpix);
  put<float>(buf, kOffPixdim, 1.0f);  // qfac
  for (int a = 0; a < 3; ++a) put<float>(buf, kOffPixdim + 4 * (a + 1), static_cast<float>(g.spacing[a]));
  for (int a = 4; a < 8; ++a) put<float>(buf, kOffPixdim + 4 * a, 1.0f);
  put<float>(buf, kOffVoxOffset, static_cast<float>(kVoxOffset));
  put<float>(buf, kOffSclSlope, 1.0f);
  put<float>(buf, kOffSclInter, 0.0f);
  buf[kOffXyztUnits] = 2;  // mm
  const char descrip[] = "rcaqc";
  std::memcpy(buf.data() + kOffDescrip, descrip, sizeof(descrip));
  put<std::int16_t>(buf, kOffQformCode, 1);
  put<std::int16_t>(buf, kOffSformCode, 1);
  for (int a = 0; a < 3; ++a) {
    const auto c = static_cast<float>(g.origin[a] + 0.5 * g.spacing[a]);
    put<float>(buf, kOffQoffset + 4 * a, c);
    put<float>(buf, kOffSrow + 16 * a + 4 * a, static_cast<float>(g.spacing[a]));
    put<float>(buf, kOffSrow + 16 * a + 12, c);
  }
  std::memcpy(buf.data() + kOffMagic, "n+1\0", 4);
  return buf;
}

void check_int16_dims(const Grid& g) {
  for (int a = 0; a < 3; ++a)
    if (g.dims[a] > 32767) throw Error(ErrorCode::UnsupportedFormat, "dimension exceeds NIfTI-1 limit");
}

std::vector<std::uint8_t> to_labels(const Decoded& d) {
  std::vector<std::uint8_t> labels(d.values.size());
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    const double v = d.values[i];
    if (!std::isfinite(v) || v != std::floor(v))
      throw Error(ErrorCode::InvalidLabel, "non-integer label value");
    if (v < 0.0 || v > kMaxLabel) throw Error(ErrorCode::InvalidLabel, "label value outside {0..3}");
    labels[i] = static_cast<std::uint8_t>(v);
  }
  return labels;
}

// Raw format --------------------------------------------------------------

constexpr std::size_t kRawHeader = 24;

Grid decode_raw_header(const std::vector<unsigned char>& buf) {
  if (buf.size() < kRawHeader) throw Error(ErrorCode::CorruptHeader, "raw header truncated");
  Grid g;
  for (int a = 0; a < 3; ++a) {
    std::uint32_t d;
    float s;
    std::memcpy(&d, buf.data() + 4 * a, 4);
    std::memcpy(&s, buf.data() + 12 + 4 * a, 4);
    if (d < 1 || d > (1u << 20)) throw Error(ErrorCode::CorruptHeader, "raw dims invalid");
    g.dims[a] = static_cast<int>(d);
    g.spacing[a] = s;
  }
  try {
    g.validate();
  } catch (const Error&) {
    throw Error(ErrorCode::CorruptHeader, "raw spacing invalid");
  }
  return g;
}

std::vector<unsigned char> encode_raw_header(const Grid& g) {
  std::vector<unsigned char> buf(kRawHeader);
  for (int a = 0; a < 3; ++a) {
    const auto d = static_cast<std::uint32_t>(g.dims[a]);
    const auto s = static_cast<float>(g.spacing[a]);
    std::memcpy(buf.data() + 4 * a, &d, 4);
    std::memcpy(buf.data() + 12 + 4 * a, &s, 4);
  }
  return buf;
}

}  // namespace

Volume load_nifti_volume(const std::filesystem::path& path) {
  auto d = decode_nifti(path);
  std::vector<float> data(d.values.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(d.values[i]);
  return Volume(d.grid, std::move(data));
}

LabelMap load_nifti_labels(const std::filesystem::path& path) {
  auto d = decode_nifti(path);
  return LabelMap(d.grid, to_labels(d));
}

void save_nifti(const Volume& v, const std::filesystem::path& path) {
  check_int16_dims(v.grid());
  const auto data = v.data();
  for (float x : data)
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidData, "refusing to save non-finite voxel");
  auto buf = encode_header(v.grid(), kFloat32, 32);
  const std::size_t off = buf.size();
  buf.resize(off + data.size() * sizeof(float));
  std::memcpy(buf.data() + off, data.data(), data.size() * sizeof(float));
  write_file(path, buf);
}

void save_nifti(const LabelMap& lm, const std::filesystem::path& path) {
  check_int16_dims(lm.grid());
  auto buf = encode_header(lm.grid(), kUInt8, 8);
  const auto labels = lm.labels();
  buf.insert(buf.end(), labels.begin(), labels.end());
  write_file(path, buf);
}

Volume load_raw_volume(const std::filesystem::path& path) {
  const auto buf = read_file(path);
  const Grid g = decode_raw_header(buf);
  if (buf.size() != kRawHeader + g.size() * sizeof(float))
    throw Error(ErrorCode::CorruptHeader, "raw float32 payload size mismatch");
  std::vector<float> data(g.size());
  std::memcpy(data.data(), buf.data() + kRawHeader, data.size() * sizeof(float));
  return Volume(g, std::move(data));
}

LabelMap load_raw_labels(const std::filesystem::path& path) {
  const auto buf = read_file(path);
  const Grid g = decode_raw_header(buf);
  if (buf.size() != kRawHeader + g.size())
    throw Error(ErrorCode::CorruptHeader, "raw uint8 payload size mismatch");
  return LabelMap(g, std::vector<std::uint8_t>(buf.begin() + kRawHeader, buf.end()));
}

void save_raw(const Volume& v, const std::filesystem::path& path) {
  auto buf = encode_raw_header(v.grid());
  const auto data = v.data();
  const std::size_t off = buf.size();
  buf.resize(off + data.size() * sizeof(float));
  std::memcpy(buf.data() + off, data.data(), data.size() * sizeof(float));
  write_file(path, buf);
}

void save_raw(const LabelMap& lm, const std::filesystem::path& path) {
  auto buf = encode_raw_header(lm.grid());
  const auto labels = lm.labels();
  buf.insert(buf.end(), labels.begin(), labels.end());
  write_file(path, buf);
}

}  // namespace rcaqc
