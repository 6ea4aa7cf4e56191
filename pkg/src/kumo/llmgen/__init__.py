from .client import (
    API_KEY_ENV,
    COMPLETE,
    TRUNCATED,
    ChatClient,
    ChatRequest,
    ChatResponse,
    EndpointConfig,
    HttpChatTransport,
    load_endpoint_config,
)
from .mock import (
    CannedPipelineTransport,
    QueueTransport,
    render_plain_book,
    serve_transport_http,
    synthesize_config_doc,
)
from .pipeline import (
    BookVerdict,
    LLMAgent,
    extract_config_text,
    generate_seed_config,
    propose_domains,
    revise_knowledge_book,
    write_knowledge_book,
)

__all__ = [
    "API_KEY_ENV",
    "BookVerdict",
    "COMPLETE",
    "CannedPipelineTransport",
    "ChatClient",
    "ChatRequest",
    "ChatResponse",
    "EndpointConfig",
    "HttpChatTransport",
    "LLMAgent",
    "QueueTransport",
    "TRUNCATED",
    "extract_config_text",
    "generate_seed_config",
    "load_endpoint_config",
    "propose_domains",
    "render_plain_book",
    "revise_knowledge_book",
    "serve_transport_http",
    "synthesize_config_doc",
    "write_knowledge_book",
]
