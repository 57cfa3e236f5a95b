pub mod bisections;
pub mod category;
pub mod cli;
pub mod fullgroup;
pub mod garside;
pub mod zappa_szep;
