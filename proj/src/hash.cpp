#include "clann/hash.hpp"

#include <fstream>
#include <iterator>

#include "clann/error.hpp"

namespace clann {

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  Fnv1a hash;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    hash.add_byte(static_cast<std::uint8_t>(*it));
  }
  return hash.value();
}

}  // namespace clann
