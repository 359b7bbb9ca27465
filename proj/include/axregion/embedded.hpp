#pragma once

#include <string_view>

// Data files compiled into the library (see data/).
namespace axregion::embedded {

std::string_view role_vocabulary();
std::string_view abstraction_prompt();
std::string_view selection_prompt();
std::string_view action_digest_prompt();

}  // namespace axregion::embedded
