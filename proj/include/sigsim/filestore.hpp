#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace sigsim {

class SecureFileStore;

/// Handle to one encrypted blob as seen from outside the enclave. The holder
/// can copy it and write it back, but there is no way to read the plaintext
/// or make a token the store did not issue.
class BlobToken {
 public:
  friend bool operator==(const BlobToken&, const BlobToken&) = default;

 private:
  friend class SecureFileStore;
  explicit BlobToken(std::uint64_t id) : id_(id) {}
  std::uint64_t id_;
};

/// Encrypted per-file storage as the OS sees it: ciphertext blobs it can copy
/// around freely, with content (modelled as a version tag) only visible to
/// enclave-side reads.
class SecureFileStore {
 public:
  /// Enclave-side (or admin-side) write of fresh content.
  void write(const std::string& path, const std::string& version) {
    const std::uint64_t id = next_id_++;
    files_[path] = id;
    issued_[id] = Issued{path, version};
  }

  /// Enclave-side read; what a reload handler decrypts.
  std::optional<std::string> read_version(const std::string& path) const {
    auto it = files_.find(path);
    if (it == files_.end()) return std::nullopt;
    return issued_.at(it->second).version;
  }

  /// Copies the ciphertext currently stored at path.
  BlobToken capture(const std::string& path) const {
    auto it = files_.find(path);
    if (it == files_.end()) {
      throw std::out_of_range("no file at path: " + path);
    }
    return BlobToken(it->second);
  }

  /// Writes a previously captured ciphertext back. The blob must have been
  /// issued for the same path; file keys differ per path, so a blob moved
  /// elsewhere would never decrypt.
  void replay(const std::string& path, const BlobToken& token) {
    auto it = issued_.find(token.id_);
    if (it == issued_.end()) {
      throw std::invalid_argument("unknown blob token");
    }
    if (it->second.path != path) {
      throw std::invalid_argument("blob was captured from a different path");
    }
    files_[path] = token.id_;
  }

 private:
  struct Issued {
    std::string path;
    std::string version;
  };

  std::uint64_t next_id_ = 1;
  std::map<std::string, std::uint64_t> files_;   // path -> current blob
  std::map<std::uint64_t, Issued> issued_;       // every blob ever written
};

}  // namespace sigsim
