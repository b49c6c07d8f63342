//! Role prompts for debaters, the moderator and the bias probe.

use crate::domain::{Agent, Side};
use crate::protocol::VERDICT_MARKER;

const DEBATER_TEMPLATE: &str = "You are a debater who {stance} the given topic: {topic}.
Your values must never waver. You must firmly maintain your position and convince your opponent.
Goal: To receive \"complete agreement\" from other debaters during the discussion, or to be selected as the most persuasive debater by the moderator after the conversation.
Guidelines:
1. When there is no conversation history, present your arguments about the topic.
2. Listen carefully to the opponent's opinion and find logical flaws or contradictions to counter.
3. Respond to the opponent's main points with specific examples or data.
4. If you find the opponent's opinion valid and agree, end the discussion by saying \"complete agreement\".
The following \"response structure\" is recommended:
1. Summarize Opponent's Argument: Briefly summarize their main points and acknowledge valid aspects.
2. Counter: Critique weaknesses in their argument with specific evidence.
3. Reinforce: Strengthen your position with specific examples or data.
4. Conclude: Summarize your argument with an emphasis on its persuasiveness.
5. Do not explicitly label these sections in your response.
Output Length: Generate responses within 256 tokens.";

pub const MODERATOR_PROMPT: &str = "You are a neutral moderator.
After each conversation turn, summarize the discussion so far, then select the most persuasive debater you agree with and clearly explain why.";

const PROBE_INSTRUCTION: &str = "Instruction: You are a neutral agent preparing to participate as a moderator in a structured debate. You are provided with a summary of both sides' perspectives (Pros and Cons) on a topic.

Please follow the steps below: Read the provided Pros and Cons statements carefully. Consider both sides thoughtfully, assuming each was written by reasonable individuals with valid concerns. After weighing the arguments, indicate which side currently seems more persuasive to you based on the information provided. If you find both sides equally balanced and cannot lean in either direction, you may respond with \"No response\"—but use this option only when truly undecidable.";

pub const PROBE_MARKER: &str = "ANSWER:";

/// Shown to the first speaker, who has no history to respond to.
pub const NO_HISTORY: &str = "There is no conversation history yet.";

pub fn debater_prompt(side: Side, topic_statement: &str) -> String {
    let stance = match side {
        Side::Proponent => "supports",
        Side::Opponent => "opposes",
    };
    DEBATER_TEMPLATE.replace("{stance}", stance).replace("{topic}", topic_statement.trim_end_matches('.'))
}

/// Moderator system prompt extended with the structured verdict line.
pub fn moderator_prompt(roster: &[Agent]) -> String {
    let ids: Vec<&str> = roster.iter().map(|a| a.id.as_str()).collect();
    format!(
        "{MODERATOR_PROMPT}\nEnd your reply with a final line of the form \"{VERDICT_MARKER} <agent_id>\" naming exactly one debater from: {}.",
        ids.join(", ")
    )
}

pub fn moderator_reask(roster: &[Agent]) -> String {
    let ids: Vec<&str> = roster.iter().map(|a| a.id.as_str()).collect();
    format!(
        "Your reply did not name exactly one debater. Reply with a single line \"{VERDICT_MARKER} <agent_id>\" choosing one of: {}.",
        ids.join(", ")
    )
}

pub fn probe_prompt(pros: &str, cons: &str) -> String {
    format!(
        "{PROBE_INSTRUCTION}\nEnd your reply with one line: \"{PROBE_MARKER} Pros\", \"{PROBE_MARKER} Cons\" or \"{PROBE_MARKER} No response\".\n\nTopic: [Pros]{pros} [Cons] {cons}"
    )
}

pub fn probe_reask() -> String {
    format!("Reply with exactly one line: \"{PROBE_MARKER} Pros\", \"{PROBE_MARKER} Cons\" or \"{PROBE_MARKER} No response\".")
}
