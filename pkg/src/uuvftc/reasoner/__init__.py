from .endpoint import EndpointConfig, EndpointReasoner, RetryableReasonerError, llm_generate
from .memory import MemoryStores, memory_context, memory_record
from .prompt import MissionTask, PromptContext, build_prompt
from .scripted import ScriptedReasoner, StrategyTable, scripted_generate
from .strategy import (ActionKind, OutOfSchemaAction, ParseError, ParseLimits, StrategyTheta,
                       admit_extra_action, parse_symbolic, serialize)
