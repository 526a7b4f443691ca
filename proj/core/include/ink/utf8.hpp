#pragma once

#include <string>
#include <string_view>

namespace ink {

/// Decodes UTF-8 into codepoints. Throws UserError on malformed input.
std::u32string utf8_decode(std::string_view s);

std::string utf8_encode(std::u32string_view s);
std::string utf8_encode(char32_t c);

}  // namespace ink
