#pragma once

namespace comix {

// Default inventories, embedded from data/*.json at build time.
const char* builtin_registry_json();
const char* builtin_connectors_json();
const char* builtin_grammar_json();

}  // namespace comix
