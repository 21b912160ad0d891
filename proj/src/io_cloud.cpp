#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dfloc/io.hpp"
#include "io_util.hpp"

namespace dfloc {

namespace {

constexpr char kCloudMagic[8] = {'D', 'F', 'L', 'O', 'C', 'C', 'L', 'D'};

PointCloud read_binary(std::ifstream& in, std::uint64_t file_size, Frame frame,
                       const std::string& name) {
  unsigned char header[16];
  if (file_size < 16) throw Error(ErrorCode::kTruncated, name + ": binary cloud header truncated");
  in.read(reinterpret_cast<char*>(header), 16);
  std::uint64_t count = 0;
  for (int b = 7; b >= 0; --b) count = (count << 8) | header[8 + b];
  if (count > (file_size - 16) / 12 || file_size != 16 + 12 * count) {
    throw Error(ErrorCode::kTruncated, name + ": payload does not match point count");
  }
  if (count == 0) throw Error(ErrorCode::kEmptyInput, name + ": cloud has no points");
  std::vector<unsigned char> buf(12 * count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw Error(ErrorCode::kTruncated, name + ": payload truncated");
  std::vector<Point3> pts(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    for (int a = 0; a < 3; ++a) {
      const unsigned char* p = buf.data() + 12 * i + 4 * a;
      const std::uint32_t bits = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
                                 std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
      pts[i][a] = static_cast<double>(std::bit_cast<float>(bits));
    }
    if (!pts[i].allFinite()) {
      throw Error(ErrorCode::kNonFinite, name + ": non-finite point at index " + std::to_string(i));
    }
  }
  return PointCloud(frame, std::move(pts));
}

}  // namespace

PointCloud read_cloud(const std::filesystem::path& path, Frame frame) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open cloud file: " + path.string());
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  const std::string name = path.string();

  char magic[8] = {};
  if (file_size >= 8) {
    in.read(magic, 8);
    in.seekg(0, std::ios::beg);
    if (std::memcmp(magic, kCloudMagic, 8) == 0) return read_binary(in, file_size, frame, name);
  }

  std::vector<Point3> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(detail::strip_comment(line));
    if (body.empty()) continue;
    const auto tokens = detail::split_ws(body);
    if (tokens.size() != 3) {
      throw Error(ErrorCode::kParse, name + ": line " + std::to_string(line_no) +
                                         ": expected 3 values, got " +
                                         std::to_string(tokens.size()));
    }
    Point3 p;
    for (int a = 0; a < 3; ++a) {
      if (!detail::parse_double(tokens[a], p[a])) {
        throw Error(ErrorCode::kParse, name + ": line " + std::to_string(line_no) +
                                           ": cannot parse '" + std::string(tokens[a]) + "'");
      }
    }
    if (!p.allFinite()) {
      throw Error(ErrorCode::kNonFinite,
                  name + ": line " + std::to_string(line_no) + ": non-finite value");
    }
    pts.push_back(p);
  }
  if (pts.empty()) throw Error(ErrorCode::kEmptyInput, name + ": cloud has no points");
  return PointCloud(frame, std::move(pts));
}

void write_cloud_xyz(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out << "# x y z (" << to_string(cloud.frame()) << " frame)\n";
  char buf[96];
  for (const auto& p : cloud) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

void write_cloud_binary(const PointCloud& cloud, const std::filesystem::path& path) {
  std::vector<unsigned char> buf;
  buf.reserve(16 + 12 * cloud.size());
  buf.insert(buf.end(), std::begin(kCloudMagic), std::end(kCloudMagic));
  const std::uint64_t count = cloud.size();
  for (int b = 0; b < 8; ++b) buf.push_back(static_cast<unsigned char>(count >> (8 * b)));
  for (const auto& p : cloud) {
    for (int a = 0; a < 3; ++a) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(p[a]));
      for (int b = 0; b < 4; ++b) buf.push_back(static_cast<unsigned char>(bits >> (8 * b)));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace dfloc
