use serde::{Deserialize, Serialize};

use super::Role;
use crate::corpus::LanguageCode;

/// Everything an authenticated caller can ask the project to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operation {
    CreateUser,
    ModifyUser,
    DeleteUser,
    ListUsers,
    UploadFile,
    LoadDictionary,
    PostNotice,
    ExportProject,
    ViewTimeLog,
    ViewUserProgress,
    ViewProgress,
    ListNotices,
    Adapt,
    ViewFile,
    AssignFile,
    ReassignFile,
    CompleteFile,
    DownloadFile,
    Annotate,
    ReadLexicon,
    UpdateLexicon,
    ViewAgreement,
    Translate,
}

impl Operation {
    pub const ALL: [Operation; 23] = [
        Operation::CreateUser,
        Operation::ModifyUser,
        Operation::DeleteUser,
        Operation::ListUsers,
        Operation::UploadFile,
        Operation::LoadDictionary,
        Operation::PostNotice,
        Operation::ExportProject,
        Operation::ViewTimeLog,
        Operation::ViewUserProgress,
        Operation::ViewProgress,
        Operation::ListNotices,
        Operation::Adapt,
        Operation::ViewFile,
        Operation::AssignFile,
        Operation::ReassignFile,
        Operation::CompleteFile,
        Operation::DownloadFile,
        Operation::Annotate,
        Operation::ReadLexicon,
        Operation::UpdateLexicon,
        Operation::ViewAgreement,
        Operation::Translate,
    ];

    /// Operations that act on data of one language.
    pub fn is_language_scoped(self) -> bool {
        use Operation::*;
        matches!(
            self,
            ViewFile
                | AssignFile
                | ReassignFile
                | CompleteFile
                | DownloadFile
                | Annotate
                | ReadLexicon
                | UpdateLexicon
                | ViewAgreement
                | Translate
        )
    }
}

/// The role × operation matrix.
///
/// `target` is the language of the data acted on; it is ignored for
/// operations that are not language-scoped. Annotation and completion by
/// annotators are further limited to files they are actively assigned,
/// which the project checks separately.
pub fn allowed(role: &Role, op: Operation, target: Option<&LanguageCode>) -> bool {
    use Operation::*;
    let own = |l: &LanguageCode| target == Some(l);
    match role {
        Role::MasterAdmin => op != Annotate,
        Role::Admin(l) => match op {
            ListUsers | ViewProgress | ListNotices | Adapt => true,
            ViewFile | AssignFile | ReassignFile | CompleteFile | DownloadFile | ReadLexicon | UpdateLexicon
            | ViewAgreement | Translate => own(l),
            _ => false,
        },
        Role::Annotator(l) => match op {
            ViewProgress | ListNotices => true,
            ViewFile | Annotate | CompleteFile | ReadLexicon | UpdateLexicon | Translate => own(l),
            _ => false,
        },
    }
}
