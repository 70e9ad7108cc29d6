// Client-side mirror of the server's persona invariants, so a bad form never
// produces a wire message in the first place.

import type { PersonaPayload } from "./protocol.js";

export const TRAIT_MAX_CHARS = 200;

export const SUPPORTED_LANGUAGES = [
  "en-US",
  "en-GB",
  "es-ES",
  "es-MX",
  "fr-FR",
  "de-DE",
  "it-IT",
  "pt-BR",
  "hi-IN",
  "ja-JP",
  "ko-KR",
  "zh-CN",
  "ar-SA",
] as const;

// Primary language subtag plus optional script/region/variant subtags.
const BCP47_RE =
  /^[A-Za-z]{2,8}(-[A-Za-z]{4})?(-(?:[A-Za-z]{2}|\d{3}))?(-(?:[A-Za-z\d]{5,8}|\d[A-Za-z\d]{3}))*$/;

export function checkPersonaForm(persona: PersonaPayload): string[] {
  const errors: string[] = [];
  if (persona.agent_name.trim() === "") {
    errors.push("agent_name must not be empty");
  }
  if (persona.premise.trim() === "") {
    errors.push("premise must not be empty");
  }
  if (persona.personality_traits.length === 0) {
    errors.push("at least one personality trait is required");
  }
  persona.personality_traits.forEach((trait, i) => {
    if (trait.length > TRAIT_MAX_CHARS) {
      errors.push(`trait ${i} is longer than ${TRAIT_MAX_CHARS} characters`);
    }
  });
  const supported = new Set(SUPPORTED_LANGUAGES.map((t) => t.toLowerCase()));
  if (!BCP47_RE.test(persona.language) || !supported.has(persona.language.toLowerCase())) {
    errors.push(`language ${JSON.stringify(persona.language)} is not supported`);
  }
  return errors;
}
