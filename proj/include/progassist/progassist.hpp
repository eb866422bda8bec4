#pragma once

#include "progassist/apeval/evaluate.hpp"
#include "progassist/apeval/prompt.hpp"
#include "progassist/apeval/runner.hpp"
#include "progassist/apeval/suite.hpp"
#include "progassist/conversation.hpp"
#include "progassist/conversation_json.hpp"
#include "progassist/edit_formats.hpp"
#include "progassist/edit_script.hpp"
#include "progassist/error.hpp"
#include "progassist/llm/cassette.hpp"
#include "progassist/llm/client.hpp"
#include "progassist/packing.hpp"
#include "progassist/pipeline/driver.hpp"
#include "progassist/pipeline/measure.hpp"
#include "progassist/pipeline/mock_backend.hpp"
#include "progassist/pipeline/prompts.hpp"
#include "progassist/pipeline/record.hpp"
#include "progassist/pipeline/sample.hpp"
#include "progassist/pipeline/steps.hpp"
#include "progassist/rng.hpp"
#include "progassist/text_document.hpp"
