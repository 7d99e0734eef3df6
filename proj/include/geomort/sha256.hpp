#pragma once

#include <cstdint>
#include <string>

namespace geomort {

// Incremental SHA-256 (FIPS 180-4). Used for cache keys and artifact
// manifests; not a general-purpose crypto interface.
class Sha256 {
public:
  Sha256();
  void update(const void* data, std::size_t len);
  void update(const std::string& s) { update(s.data(), s.size()); }
  // Finalizes and returns the lowercase hex digest. The object must not be
  // updated afterwards.
  std::string hex_digest();

private:
  void process_block(const std::uint8_t* p);

  std::uint32_t h_[8];
  std::uint8_t buf_[64];
  std::size_t buf_len_;
  std::uint64_t total_len_;
};

std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);

}  // namespace geomort
