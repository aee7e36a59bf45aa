#pragma once

#include <map>
#include <string>
#include <string_view>

namespace veritrail::pipeline {

// The four prompt templates. User templates carry {user_docs_str},
// {context_str} and {query_str} placeholders; system prompts are fixed text.

const std::string& bca_system_prompt();
const std::string& bca_user_template();
const std::string& pca_system_prompt();
const std::string& pca_user_template();

/// Substitutes {name} placeholders from the map in a single pass; substituted
/// values are inserted verbatim and never rescanned. Unknown placeholders are
/// left in place (and caught by render-time validation).
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values);

} // namespace veritrail::pipeline
