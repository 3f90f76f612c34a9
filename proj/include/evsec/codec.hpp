// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "json.hpp"

#include "evsec/envelope.hpp"
#include "evsec/model.hpp"
#include "evsec/term.hpp"

// Structured JSON encodings used by the trace log. Decoders throw
// CorruptTrace on malformed input.
namespace evsec {

nlohmann::json to_json(const Term& t);
Term term_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FieldList& fields);
FieldList fields_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Payload& p);
Payload payload_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SecuredDocument& d);
SecuredDocument document_from_json(const nlohmann::json& j);

std::vector<nlohmann::json> to_json(const std::vector<Term>& terms);
std::vector<Term> terms_from_json(const nlohmann::json& j);

}  // namespace evsec
