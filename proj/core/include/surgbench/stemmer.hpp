#pragma once
// Porter stemmer (1980 algorithm), used only by the METEOR stemmed-match
// pass. Input must already be lowercase ASCII.

#include <string>
#include <string_view>

namespace surgbench {

std::string porter_stem(std::string_view word);

}  // namespace surgbench
