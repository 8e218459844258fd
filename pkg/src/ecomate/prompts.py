"""Prompt assembly for batch routine generation and the chat assistant.

The instruction texts live as template files under ``data/prompts/`` with
``{{placeholder}}`` markers; this module only substitutes placeholders and
prepends the home configuration and energy data. Everything here is pure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources

from .home import EnergyProfile, HomeTemplate

HISTORY_WINDOW = 5

# Post-processing warns (never rejects) when the free-text part of a model
# response exceeds this many words.
EXPLANATION_WORD_BUDGET = 20


class PromptVariant(enum.Enum):
    GREEN = "green"
    NO_GREEN = "no_green"
    ECOMATE_CHAT = "ecomate_chat"


class HistoryOnBatchVariantError(ValueError):
    """Chat history was supplied to a single-shot prompt variant."""


class MissingUsernameError(ValueError):
    """The chat variant needs a username for its greeting placeholder."""


@dataclass(frozen=True)
class PromptBundle:
    """A fully assembled request: instructions, context JSON, and turns."""

    variant: PromptVariant
    system_text: str
    home_config_json: str
    energy_json: str
    user_command: str
    history: tuple[tuple[str, str], ...] = ()
    username: str | None = None

    def context_block(self) -> str:
        """Home and energy JSON, in the order they precede the instructions."""
        return self.home_config_json + "\n" + self.energy_json

    def to_messages(self) -> list[tuple[str, str]]:
        """Serialize for a chat-completions request.

        The context JSON always comes before the instruction text. Batch
        variants carry everything in one user turn (the command is already
        substituted into the instructions); the chat variant sends the
        combined text as the system turn followed by the history window.
        """
        combined = self.context_block() + "\n" + self.system_text
        if self.variant is PromptVariant.ECOMATE_CHAT:
            return [("system", combined), *self.history]
        return [("user", combined)]


def _load_template(name: str) -> str:
    return resources.files("ecomate.data.prompts").joinpath(name).read_text(encoding="utf-8")


def prompt_template_text(variant: PromptVariant) -> str:
    return _load_template(f"{variant.value}.txt")


def explanation_word_budget() -> int:
    return EXPLANATION_WORD_BUDGET


def is_over_explanation_budget(text: str) -> bool:
    return len(text.split()) > EXPLANATION_WORD_BUDGET


def build_prompt(
    variant: PromptVariant,
    template: HomeTemplate,
    profile: EnergyProfile,
    command: str,
    history: list[tuple[str, str]] | None = None,
    username: str | None = None,
) -> PromptBundle:
    """Assemble a PromptBundle for the given variant.

    Batch variants (green / no-green) substitute the command into the
    instruction text and accept no history. The chat variant substitutes the
    username, carries the command as the latest chat turn, and keeps only the
    most recent ``HISTORY_WINDOW`` messages.
    """
    if not command:
        raise ValueError("command must be non-empty")
    history = history or []
    text = prompt_template_text(variant)

    if variant is PromptVariant.ECOMATE_CHAT:
        if not username:
            raise MissingUsernameError("chat prompts require a username")
        system_text = text.replace("{{username}}", username)
        window = tuple(history[-HISTORY_WINDOW:])
    else:
        if history:
            raise HistoryOnBatchVariantError(
                f"{variant.value} prompts are single-shot; got {len(history)} history messages")
        system_text = text.replace("{{user_command}}", command)
        window = ()

    return PromptBundle(
        variant=variant,
        system_text=system_text,
        home_config_json=template.to_canonical_json(),
        energy_json=profile.to_canonical_json(),
        user_command=command,
        history=window,
        username=username,
    )
