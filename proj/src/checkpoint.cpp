#include "releaseflow/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "binary_io.hpp"
#include "releaseflow/error.hpp"

namespace releaseflow::nn {

using detail::get_f64;
using detail::put_f64;
using detail::put_u64;

namespace {

constexpr std::array<char, 8> kMagic = {'R', 'F', 'L', 'O', 'W', 'M', 'L', 'P'};

}  // namespace

void write_checkpoint(std::ostream& out, const MlpParams& params) {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, params.arch().digest());
  for (Eigen::Index i = 0; i < params.values().size(); ++i) {
    put_f64(out, params.values()[i]);
  }
  if (!out) fail(ErrorKind::Io, "failed writing checkpoint");
}

MlpParams read_checkpoint(std::istream& in, const MlpArchitecture& arch) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) fail(ErrorKind::Parse, "not a parameter checkpoint (bad magic)");
  if (detail::get_u64(in, "checkpoint") != arch.digest()) {
    fail(ErrorKind::Parse, "checkpoint architecture does not match the requested network");
  }
  Eigen::VectorXd values(arch.param_count());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    values[i] = get_f64(in, "checkpoint");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(ErrorKind::Parse, "checkpoint has trailing data");
  }
  return MlpParams(arch, std::move(values));
}

void save_checkpoint(const std::filesystem::path& path, const MlpParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  write_checkpoint(out, params);
}

MlpParams load_checkpoint(const std::filesystem::path& path, const MlpArchitecture& arch) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return read_checkpoint(in, arch);
}

}  // namespace releaseflow::nn
