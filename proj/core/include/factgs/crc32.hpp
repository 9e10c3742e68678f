#pragma once

#include <cstddef>
#include <cstdint>

namespace factgs {

/// CRC-32 (IEEE 802.3, reflected 0xEDB88320). crc32("123456789") == 0xCBF43926.
std::uint32_t crc32(const void* data, std::size_t size);

} // namespace factgs
