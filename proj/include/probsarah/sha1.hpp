#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace probsarah {

// SHA-1 of a byte string, lowercase hex.
std::string sha1_hex(std::string_view data);

// Hash of a blob the way git computes it: sha1("blob <size>\0" + content).
// Used to fingerprint experiment inputs in the output manifest.
std::string git_blob_sha1(std::string_view content);

}  // namespace probsarah
