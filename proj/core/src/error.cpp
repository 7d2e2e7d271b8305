/******************************************************************************
 * Copyright 2026 The lanestruct Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the License);
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an AS IS BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/

#include "lanestruct/error.hpp"

namespace lanestruct {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kCollinearHorizontal: return "CollinearHorizontal";
    case ErrorCode::kNoIntersections: return "NoIntersections";
    case ErrorCode::kAssignmentOverflow: return "AssignmentOverflow";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kHorizonSingularity: return "HorizonSingularity";
    case ErrorCode::kTooFewLanes: return "TooFewLanes";
    case ErrorCode::kDivergedOptimization: return "DivergedOptimization";
    case ErrorCode::kDivergedTraining: return "DivergedTraining";
    case ErrorCode::kEmptyRaster: return "EmptyRaster";
    case ErrorCode::kRowGridMismatch: return "RowGridMismatch";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace lanestruct
