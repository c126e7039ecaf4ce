"""Renderable prompt templates used by the meta-controller.

Templates use ``{name}`` placeholders. Rendering is strict: every placeholder
must be supplied or a TemplateError lists what is missing. The library covers
the review prompts for the two stock tasks, a generic review prompt for any
label set, the model-ranking prompt, and the four code-generation system
prompts kept for operators who want an LLM to draft stage scripts (the engine
itself never executes generated code).
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field

from .core import LabelSchema
from .errors import TemplateError

_FORMATTER = string.Formatter()


def _placeholders(text: str) -> frozenset[str]:
    names = set()
    for _, name, _, _ in _FORMATTER.parse(text):
        if name:
            names.add(name)
    return frozenset(names)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str
    required: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "required", _placeholders(self.text))


def render_prompt(template: PromptTemplate, vars: dict[str, str] | None = None) -> str:
    """Strict textual substitution; byte-stable for identical inputs.

    Both directions are checked: every required placeholder must be supplied,
    and every supplied name must exist in the template (typo guard).
    """
    vars = vars or {}
    missing = sorted(template.required - set(vars))
    if missing:
        raise TemplateError(template.name, missing)
    unknown = sorted(set(vars) - template.required)
    if unknown:
        raise TemplateError(template.name, unknown)
    return template.text.format(**vars)


REVIEW_PREAMBLE = (
    "You are an autoclassifier that's responsible for labeling input text. "
    "You must respond with only one of these labels: "
)

STRICTNESS_SUFFIX = (
    "Your previous answer was not one of the allowed labels. "
    "Respond with exactly one label from the list and nothing else."
)

TEMPLATES: dict[str, PromptTemplate] = {}


def _add(name: str, text: str) -> PromptTemplate:
    t = PromptTemplate(name=name, text=text)
    TEMPLATES[name] = t
    return t


_add("review_generic", REVIEW_PREAMBLE + "{labels}.")

_add("review_sentiment", REVIEW_PREAMBLE + "positive, negative, neutral.")

_add("review_toxicity", REVIEW_PREAMBLE + "toxic, non-toxic.")

_add(
    "model_ranking",
    "You are selecting specialist text-classification models for an annotation task.\n"
    "Task: {task_name}\n"
    "Allowed labels: {labels}\n"
    "Candidate models (id: description):\n"
    "{candidates}\n"
    "Rank the candidates by how well they fit the task and reply with the best "
    "{k} model ids, one id per line, most suitable first. Reply with ids only.",
)

_add(
    "model_selection",
    "Write directly runnable code that searches a model hub for text "
    "annotation models fitting this task and label set exactly.\n"
    "Task type: {task_type}\n"
    "Labels: {labels}\n"
    "Pick {k} models whose label heads match the label set, display their id, "
    "parameter count and download count in a small table UI, and save the "
    "table to {path}. Reply with code only.",
)

_add(
    "model_deployment",
    "Write directly runnable code that downloads the models whose ids appear "
    "in the 'Model ID' column of {local_file} and saves each one under "
    "{local_path}, using the id with '/' replaced by '_' as the directory "
    "name. Reply with code only.",
)

_add(
    "data_annotation",
    "Write directly runnable code that loads the pretrained classifier "
    "{model_id} from {local_path}, labels the text column of {local_file} for "
    "the task '{task_type}', and writes the result with the label column "
    "named {label_col_name} and the confidence column named "
    "{confidence_col_name}. Reply with code only.",
)

_add(
    "model_finetuning",
    "Write directly runnable code that full-parameter fine-tunes {model_id} "
    "loaded from {local_path} on the 'text' and 'label' columns of "
    "{local_file}, then saves the fine-tuned model to {save_path}. Reply "
    "with code only.",
)


def review_prompt_for(schema: LabelSchema) -> str:
    """The system prompt the expert reviewer sees for a task's label set."""
    stock = TEMPLATES.get(f"review_{schema.task_name}")
    if stock is not None and not stock.required:
        return render_prompt(stock)
    return render_prompt(TEMPLATES["review_generic"], {"labels": ", ".join(schema.labels)})
