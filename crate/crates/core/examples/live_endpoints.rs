//! Ask one question through an OpenAI-compatible chat endpoint and embed a
//! sentence with an OpenAI-compatible embedding endpoint.
//!
//! Needs a server, e.g. a local vLLM or llama.cpp instance:
//!
//! ```text
//! GDELT_KG_CHAT_BASE_URL=http://localhost:8000/v1 GDELT_KG_CHAT_MODEL=mistralai/Mistral-7B-Instruct-v0.2 \
//! GDELT_KG_CHAT_API_KEY=none cargo run --example live_endpoints
//! ```
//!
//! Without `GDELT_KG_CHAT_BASE_URL` it prints the prompt it would send.

use gdelt_kg::llm::{ChatClient, Embedder, EndpointConfig, OpenAiChat, OpenAiEmbedder};
use gdelt_kg::qa::{build_rag_prompt, PROMPT_PREFIX};
use gdelt_kg::vector::Chunk;

fn main() {
    let chunk = Chunk {
        document_identifier: "https://example.com/story".into(),
        chunk_index: 0,
        text: "The container ship Dali struck the Francis Scott Key Bridge early on March 26, 2024.".into(),
        token_count: 15,
    };
    let built = build_rag_prompt(
        "What is the name of the ship that collided with the baltimore bridge?",
        &[&chunk],
        20,
    );
    assert!(built.prompt.starts_with(PROMPT_PREFIX));

    let Ok(base) = std::env::var("GDELT_KG_CHAT_BASE_URL") else {
        println!(
            "GDELT_KG_CHAT_BASE_URL not set; prompt would be:\n\n{}",
            built.prompt
        );
        return;
    };
    let model = std::env::var("GDELT_KG_CHAT_MODEL").unwrap_or_else(|_| "Mistral-7B".into());
    let mut cfg = EndpointConfig::new(&base, model);
    cfg.api_key = std::env::var("GDELT_KG_CHAT_API_KEY").ok();
    match OpenAiChat::new(cfg).complete(&built.prompt) {
        Ok(a) => println!("answer: {a}"),
        Err(e) => eprintln!("chat failed: {e}"),
    }

    if let Ok(ebase) = std::env::var("GDELT_KG_EMBED_BASE_URL") {
        let emodel = std::env::var("GDELT_KG_EMBED_MODEL").unwrap_or_else(|_| "E5-large-v2".into());
        let mut ecfg = EndpointConfig::new(ebase, emodel);
        ecfg.api_key = std::env::var("GDELT_KG_EMBED_API_KEY").ok();
        match OpenAiEmbedder::new(ecfg).embed(std::slice::from_ref(&chunk.text)) {
            Ok(v) => println!("embedding dim {}", v[0].dim()),
            Err(e) => eprintln!("embedding failed: {e}"),
        }
    }
}
