//! Serves a project over HTTP on an ephemeral port and drives it with the
//! same client the command line uses.

use corpusdesk::cli::Backend;
use corpusdesk::service::{serve_listener, ApiRequest, Method, Service, ServiceConfig};
use serde_json::json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = std::env::temp_dir().join(format!("corpusdesk-http-{}", std::process::id()));
    let store_path = store.to_string_lossy().into_owned();
    let config = ServiceConfig::from_lookup(|k| match k {
        "CORPUSDESK_LANGUAGES" => Some("hin,eng".into()),
        "CORPUSDESK_MASTER_PASSWORD" => Some("secret".into()),
        "CORPUSDESK_STORE" => Some(store_path.clone()),
        _ => None,
    })?;
    let service = Service::new(config.open_engine()?);

    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let base = format!("http://{}", listener.local_addr()?);
    rt.spawn(serve_listener(listener, service));
    println!("serving on {base}");

    let mut client = Backend::http(&base);
    let anonymous = client.call(&ApiRequest::new(Method::Get, "/api/progress"))?;
    println!("{} {}", anonymous.status, String::from_utf8_lossy(&anonymous.body));

    let login = ApiRequest::new(Method::Post, "/api/login").json(&json!({"user_id": "admin", "password": "secret"}));
    let token =
        client.call(&login)?.value().ok_or("login returned no JSON")?["token"].as_str().unwrap_or_default().to_string();
    let raw = "#LANG hin\n#DOMAIN news\nnews-000001\tराम घर गया।\n";
    let up =
        client.call(&ApiRequest::new(Method::Post, "/api/files").token(Some(&token)).body(raw.as_bytes().to_vec()))?;
    println!("{} {}", up.status, String::from_utf8_lossy(&up.body));
    let progress =
        client.call(&ApiRequest::new(Method::Get, "/api/progress").query("scope", "language").token(Some(&token)))?;
    println!("{}", String::from_utf8_lossy(&progress.body));

    drop(rt);
    std::fs::remove_dir_all(&store)?;
    Ok(())
}
