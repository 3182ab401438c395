#pragma once

#include "sentinel/common.hpp"
#include "sentinel/ingest.hpp"
#include "sentinel/lexicon.hpp"

#include <json.hpp>

namespace sentinel {

/// Best-effort mapping of an openFDA drug enforcement document (a bare array of results, or an
/// object with a "results" array) onto native recall records.
///
///   recall_initiation_date  YYYYMMDD or YYYY-MM-DD
///   classification          "Class I" / "Class II" / "Class III"
///   distribution_pattern    "nationwide" anywhere in the text, else every state code or state
///                           name mentioned
///   drug                    lexicon drugs named in product_description / openfda names when a
///                           lexicon is given (one record per drug), else openfda.generic_name[0]
///   rx_otc                  openfda.product_type, falling back to the lexicon entry
///
/// RowError.line is the 1-based index of the result record.
ParseResult<RecallRecord> convert_openfda(const nlohmann::json& document, const StudyCalendar& calendar,
                                          const DrugLexicon* lexicon = nullptr);

} // namespace sentinel
